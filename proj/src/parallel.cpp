#include "hysnet/parallel.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

namespace hysnet {
namespace {

thread_local bool g_in_worker = false;

class Pool {
public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    void set_threads(std::size_t n) {
        std::lock_guard<std::mutex> api(api_mutex_);
        n = std::max<std::size_t>(1, n);
        if (n == threads_) return;
        stop_workers();
        threads_ = n;
        start_workers();
    }

    std::size_t threads() {
        std::lock_guard<std::mutex> api(api_mutex_);
        return threads_;
    }

    void run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
        if (n == 0) return;
        if (g_in_worker) {  // nested call: run inline, the outer partition owns the data
            body(0, n);
            return;
        }
        std::lock_guard<std::mutex> api(api_mutex_);  // one job at a time
        if (threads_ <= 1 || n < 2) {
            body(0, n);
            return;
        }
        const std::size_t parts = std::min(threads_, n);
        const std::size_t chunk = (n + parts - 1) / parts;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            job_body_ = &body;
            job_n_ = n;
            job_chunk_ = chunk;
            job_parts_ = parts;
            next_part_ = 1;  // part 0 runs on the calling thread
            pending_ = parts - 1;
            ++generation_;
        }
        cv_.notify_all();
        body(0, std::min(chunk, n));
        std::unique_lock<std::mutex> lock(mutex_);
        done_cv_.wait(lock, [this] { return pending_ == 0; });
        job_body_ = nullptr;
    }

private:
    Pool() { start_workers(); }

    ~Pool() { stop_workers(); }

    void start_workers() {
        stopping_ = false;
        for (std::size_t i = 1; i < threads_; ++i) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    void stop_workers() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            stopping_ = true;
            ++generation_;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
        workers_.clear();
    }

    void worker_loop() {
        g_in_worker = true;
        std::uint64_t seen = 0;
        std::unique_lock<std::mutex> lock(mutex_);
        for (;;) {
            cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
            if (stopping_) return;
            seen = generation_;
            // Claim parts under the lock so a finished job can never be
            // touched through a stale body pointer.
            while (generation_ == seen && job_body_ != nullptr && next_part_ < job_parts_) {
                const std::size_t part = next_part_++;
                const std::size_t begin = part * job_chunk_;
                const std::size_t end = std::min(begin + job_chunk_, job_n_);
                const auto* body = job_body_;
                lock.unlock();
                if (begin < end) (*body)(begin, end);
                lock.lock();
                if (--pending_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::mutex api_mutex_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> workers_;
    std::size_t threads_ = std::max<std::size_t>(1, std::min<std::size_t>(4, std::thread::hardware_concurrency()));
    bool stopping_ = false;
    std::uint64_t generation_ = 0;
    const std::function<void(std::size_t, std::size_t)>* job_body_ = nullptr;
    std::size_t job_n_ = 0, job_chunk_ = 0, job_parts_ = 0;
    std::size_t next_part_ = 0;
    std::size_t pending_ = 0;
};

}  // namespace

void set_threads(std::size_t n) { Pool::instance().set_threads(n); }

std::size_t thread_count() { return Pool::instance().threads(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    Pool::instance().run(n, body);
}

}  // namespace hysnet
