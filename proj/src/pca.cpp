#include "hysnet/pca.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hysnet/errors.hpp"

namespace hysnet {

namespace {

void fix_sign(std::vector<double>& v) {
    for (double x : v) {
        if (std::abs(x) > 1e-12) {
            if (x < 0.0)
                for (double& e : v) e = -e;
            return;
        }
    }
}

}  // namespace

PcaResult pca_project(const std::vector<std::vector<double>>& rows, std::size_t k, double tol,
                      std::size_t max_iter) {
    const std::size_t n = rows.size();
    if (n < 2) throw ContractError("pca: need at least 2 rows");
    const std::size_t d = rows[0].size();
    if (d < 2) throw ContractError("pca: need at least 2 columns");
    for (const auto& r : rows)
        if (r.size() != d) throw ContractError("pca: ragged rows");
    if (k == 0 || k > d) throw ContractError("pca: k must be in [1, d]");

    PcaResult res;
    res.mean.assign(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) res.mean[j] += r[j];
    for (double& m : res.mean) m /= static_cast<double>(n);

    std::vector<std::vector<double>> centered(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered[i][j] = rows[i][j] - res.mean[j];

    // Population covariance, deflated in place as components are extracted.
    std::vector<double> cov(d * d, 0.0);
    for (const auto& r : centered)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) cov[a * d + b] += r[a] * r[b];
    for (double& c : cov) c /= static_cast<double>(n);
    double total_var = 0.0;
    for (std::size_t a = 0; a < d; ++a) total_var += cov[a * d + a];

    auto matvec = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (std::size_t a = 0; a < d; ++a) {
            double acc = 0.0;
            for (std::size_t b = 0; b < d; ++b) acc += cov[a * d + b] * v[b];
            out[a] = acc;
        }
    };

    for (std::size_t comp = 0; comp < k; ++comp) {
        // Deterministic start, orthogonalized against found components.
        std::vector<double> v(d);
        for (std::size_t j = 0; j < d; ++j) v[j] = 1.0 + 1e-3 * static_cast<double>(j + 1);
        for (const auto& prev : res.components) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += v[j] * prev[j];
            for (std::size_t j = 0; j < d; ++j) v[j] -= dot * prev[j];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-30) {  // start vector lies in the found span; use a basis vector
            std::fill(v.begin(), v.end(), 0.0);
            v[comp % d] = 1.0;
            norm = 1.0;
        }
        for (double& x : v) x /= norm;

        std::vector<double> next(d);
        double eigen = 0.0;
        bool converged = false;
        std::size_t it = 0;
        for (; it < max_iter; ++it) {
            matvec(v, next);
            double nn = 0.0;
            for (double x : next) nn += x * x;
            nn = std::sqrt(nn);
            if (nn < 1e-300) {  // null direction: eigenvalue 0, keep v
                eigen = 0.0;
                converged = true;
                break;
            }
            double align = 0.0;
            for (std::size_t j = 0; j < d; ++j) align += next[j] * v[j];
            const double flip = align < 0.0 ? -1.0 : 1.0;
            double delta = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double nv = flip * next[j] / nn;
                delta = std::max(delta, std::abs(nv - v[j]));
                v[j] = nv;
            }
            if (delta < tol) {
                matvec(v, next);
                eigen = 0.0;
                for (std::size_t j = 0; j < d; ++j) eigen += v[j] * next[j];
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NumericError("pca: power iteration did not converge within " +
                               std::to_string(max_iter) + " iterations (component " +
                               std::to_string(comp) + ")");
        fix_sign(v);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) cov[a * d + b] -= eigen * v[a] * v[b];
        res.explained_ratio.push_back(total_var > 0.0 ? std::max(0.0, eigen) / total_var : 0.0);
        res.components.push_back(std::move(v));
    }

    res.projection.assign(n, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += centered[i][j] * res.components[c][j];
            res.projection[i][c] = acc;
        }
    return res;
}

SeparationStats cluster_separation(const std::vector<std::vector<double>>& rows,
                                   const std::vector<std::string>& labels) {
    if (rows.size() != labels.size())
        throw ContractError("cluster_separation: rows/labels length mismatch");
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
    if (groups.size() < 2)
        throw ContractError("cluster_separation: need at least 2 distinct labels, got " +
                            std::to_string(groups.size()));
    for (const auto& [label, members] : groups)
        if (members.size() < 2)
            throw ContractError("cluster_separation: label \"" + label +
                                "\" needs at least 2 rows");

    auto dist = [&](std::size_t a, std::size_t b) {
        double acc = 0.0;
        for (std::size_t j = 0; j < rows[a].size(); ++j) {
            const double diff = rows[a][j] - rows[b][j];
            acc += diff * diff;
        }
        return std::sqrt(acc);
    };

    // Both means are expectations over independent draws (k*k ordered pairs),
    // so two identical clouds report within == between exactly.
    SeparationStats stats;
    double within_sum = 0.0;
    for (const auto& [label, members] : groups) {
        double acc = 0.0;
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b) acc += 2.0 * dist(members[a], members[b]);
        within_sum += acc / static_cast<double>(members.size() * members.size());
    }
    stats.within = within_sum / static_cast<double>(groups.size());

    double between_acc = 0.0;
    std::size_t between_pairs = 0;
    std::vector<std::pair<std::string, std::vector<std::size_t>>> glist(groups.begin(), groups.end());
    for (std::size_t ga = 0; ga < glist.size(); ++ga)
        for (std::size_t gb = ga + 1; gb < glist.size(); ++gb)
            for (std::size_t a : glist[ga].second)
                for (std::size_t b : glist[gb].second) {
                    between_acc += dist(a, b);
                    ++between_pairs;
                }
    stats.between = between_acc / static_cast<double>(between_pairs);
    return stats;
}

}  // namespace hysnet
