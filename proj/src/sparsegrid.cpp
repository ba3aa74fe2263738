#include "ioredux/sparsegrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ioredux {

namespace {

// Dedup key: coordinates rounded to 14 significant digits. Nested nodes are
// bit-identical across levels (the angle arguments differ only by powers of
// two), so this merge is deterministic.
std::string point_key(const Eigen::VectorXd& x) {
    std::string key;
    key.reserve(static_cast<std::size_t>(x.size()) * 22);
    char buf[32];
    for (long i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.13e,", x(i));
        key += buf;
    }
    return key;
}

long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

Rule1D clenshaw_curtis_1d(int level) {
    if (level < 0) throw std::invalid_argument("clenshaw_curtis_1d: negative level");
    if (level > kMaxRuleLevel) {
        std::ostringstream os;
        os << "clenshaw_curtis_1d: level " << level << " exceeds guard " << kMaxRuleLevel;
        throw std::invalid_argument(os.str());
    }

    Rule1D rule;
    rule.level = level;
    if (level == 0) {
        rule.nodes = {0.5};
        rule.weights = {1.0};
        return rule;
    }

    const int n = 1 << level;  // node count is n + 1
    rule.nodes.resize(n + 1);
    rule.weights.resize(n + 1);

    // Nodes x_k = sin^2(k*pi/(2n)) ascend from 0 to 1; computing the lower
    // half and mirroring keeps the rule exactly symmetric.
    for (int k = 0; k <= n / 2; ++k) {
        const double s = std::sin(static_cast<double>(k) * std::numbers::pi / (2.0 * n));
        rule.nodes[k] = s * s;
        rule.nodes[n - k] = 1.0 - s * s;
    }
    rule.nodes[n / 2] = 0.5;

    // Classical Clenshaw-Curtis weights on [-1,1], halved for unit measure.
    for (int j = 0; j <= n / 2; ++j) {
        const double cj = (j == 0) ? 1.0 : 2.0;
        double sum = 0.0;
        for (int k = 1; k <= n / 2; ++k) {
            const double bk = (k == n / 2) ? 1.0 : 2.0;
            sum += bk / (4.0 * k * k - 1.0) *
                   std::cos(2.0 * k * j * std::numbers::pi / n);
        }
        const double w = cj / n * (1.0 - sum) / 2.0;
        rule.weights[j] = w;
        rule.weights[n - j] = w;
    }
    return rule;
}

SparseGrid smolyak_grid(int dim, int level, std::size_t max_points) {
    if (dim < 1) throw std::invalid_argument("smolyak_grid: dim must be >= 1");
    if (level < 0) throw std::invalid_argument("smolyak_grid: level must be >= 0");

    std::vector<Rule1D> rules;
    for (int l = 0; l <= level; ++l) rules.push_back(clenshaw_curtis_1d(l));

    struct Entry {
        Eigen::VectorXd point;
        double weight = 0.0;
    };
    std::map<std::string, Entry> merged;

    // Multi-indices with |i|_1 < level - dim + 1 have a zero combination
    // coefficient and are skipped.
    std::vector<int> idx(dim, 0);
    const int lo = std::max(0, level - dim + 1);

    auto process_index = [&](const std::vector<int>& mi, int total) {
        const double coeff =
            ((level - total) % 2 == 0 ? 1.0 : -1.0) *
            static_cast<double>(binomial(dim - 1, level - total));
        if (coeff == 0.0) return;

        // Tensor product of the 1-D rules selected by mi.
        std::vector<std::size_t> counter(dim, 0);
        Eigen::VectorXd pt(dim);
        while (true) {
            double w = coeff;
            for (int d = 0; d < dim; ++d) {
                const Rule1D& r = rules[mi[d]];
                pt(d) = r.nodes[counter[d]];
                w *= r.weights[counter[d]];
            }
            auto [it, inserted] = merged.try_emplace(point_key(pt));
            if (inserted) {
                it->second.point = pt;
                if (merged.size() > max_points) {
                    std::ostringstream os;
                    os << "smolyak_grid: point count exceeds cap " << max_points
                       << " (dim=" << dim << ", level=" << level << ")";
                    throw std::invalid_argument(os.str());
                }
            }
            it->second.weight += w;

            int d = 0;
            for (; d < dim; ++d) {
                if (++counter[d] <= static_cast<std::size_t>((mi[d] == 0) ? 0 : (1 << mi[d])))
                    break;
                counter[d] = 0;
            }
            if (d == dim) break;
        }
    };

    // Enumerate multi-indices with lo <= |i|_1 <= level.
    std::function<void(int, int)> recurse = [&](int pos, int remaining) {
        if (pos == dim - 1) {
            for (int l = 0; l <= remaining; ++l) {
                idx[pos] = l;
                const int total = level - remaining + l;
                if (total >= lo) process_index(idx, total);
            }
            idx[pos] = 0;
            return;
        }
        for (int l = 0; l <= remaining; ++l) {
            idx[pos] = l;
            recurse(pos + 1, remaining - l);
        }
        idx[pos] = 0;
    };
    recurse(0, level);

    SparseGrid grid;
    grid.dim = dim;
    grid.level = level;
    grid.points.reserve(merged.size());
    grid.weights.reserve(merged.size());

    std::vector<const Entry*> entries;
    entries.reserve(merged.size());
    for (const auto& [key, e] : merged) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(), [](const Entry* a, const Entry* b) {
        for (long i = 0; i < a->point.size(); ++i) {
            if (a->point(i) != b->point(i)) return a->point(i) < b->point(i);
        }
        return false;
    });

    int width = 1;
    for (std::size_t c = entries.size(); c >= 10 && width < 18; c /= 10) ++width;
    char buf[32];
    for (std::size_t i = 0; i < entries.size(); ++i) {
        grid.points.push_back(entries[i]->point);
        grid.weights.push_back(entries[i]->weight);
        std::snprintf(buf, sizeof(buf), "p%0*zu", width, i);
        grid.point_ids.emplace_back(buf);
    }
    return grid;
}

double grid_quadrature(const SparseGrid& grid, const std::vector<double>& values) {
    if (values.size() != grid.points.size())
        throw std::invalid_argument("grid_quadrature: one value per grid point required");
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += grid.weights[i] * values[i];
    return sum;
}

}  // namespace ioredux
