#include "kgec/evaluation.hpp"
#include "kgec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kgec {

double rank_query(const EmbeddingState& state, const ModelConfig& model,
                  const Triple& query, QueryDirection direction,
                  const TripleIndex& filter) {
    const int n = state.num_entities();
    const int gold = direction == QueryDirection::Tail ? query.tail : query.head;
    if (gold < 0 || gold >= n)
        throw ContractViolation("rank_query gold entity has no embedding row");

    Triple probe = query;
    double gold_score = score(model, state, query);

    long better = 0, tied = 0;
    for (int e = 0; e < n; ++e) {
        if (e == gold) continue;
        if (direction == QueryDirection::Tail) probe.tail = e;
        else probe.head = e;
        if (filter.count(probe)) continue;
        double s = score(model, state, probe);
        if (s > gold_score) ++better;
        else if (s == gold_score) ++tied;
    }
    return static_cast<double>(better) + 1.0 + static_cast<double>(tied) / 2.0;
}

SplitMetrics evaluate_split(const EmbeddingState& state, const ModelConfig& model,
                            const TripleSet& test, const TripleIndex& filter,
                            bool parallel) {
    const long n_queries = 2 * static_cast<long>(test.size());
    std::vector<double> ranks(static_cast<size_t>(n_queries), 0.0); // 0 = skipped

    auto one_query = [&](long q) {
        const Triple& t = test[static_cast<size_t>(q / 2)];
        QueryDirection dir = (q % 2 == 0) ? QueryDirection::Tail : QueryDirection::Head;
        if (t.head < 0 || t.head >= state.num_entities() || t.tail < 0 ||
            t.tail >= state.num_entities() || t.relation < 0 ||
            t.relation >= state.num_relations())
            return; // gold or context unembedded, leave as skipped
        ranks[static_cast<size_t>(q)] = rank_query(state, model, t, dir, filter);
    };

    if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
        for (long q = 0; q < n_queries; ++q) one_query(q);
    } else {
        for (long q = 0; q < n_queries; ++q) one_query(q);
    }

    SplitMetrics m;
    for (double rank : ranks) {
        if (rank == 0.0) {
            ++m.skipped;
            continue;
        }
        ++m.queries;
        m.mrr += 1.0 / rank;
        if (rank <= 1.0) ++m.hits1;
        if (rank <= 3.0) ++m.hits3;
        if (rank <= 10.0) ++m.hits10;
    }
    if (m.queries > 0) {
        m.mrr /= static_cast<double>(m.queries);
        m.hits1 /= static_cast<double>(m.queries);
        m.hits3 /= static_cast<double>(m.queries);
        m.hits10 /= static_cast<double>(m.queries);
    }
    return m;
}

double omega_base(const AlphaMatrix& alpha, int n) {
    if (n < 1) throw ContractViolation("omega_base requires N >= 1");
    double base = alpha.at(0, 0);
    if (base == 0.0) throw std::domain_error("omega_base undefined: alpha(0,0) = 0");
    double acc = 0.0;
    for (int j = 1; j <= n; ++j) acc += alpha.at(0, j) / base;
    return acc / static_cast<double>(n);
}

double omega_new(const AlphaMatrix& alpha, int n) {
    if (n < 1) throw ContractViolation("omega_new requires N >= 1");
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) acc += alpha.at(i, i);
    return acc / static_cast<double>(n);
}

double wilcoxon_paired(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 5)
        throw ContractViolation("wilcoxon_paired requires equal lengths >= 5");

    std::vector<double> diffs;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty())
        throw std::domain_error("wilcoxon_paired degenerate: all differences zero");

    const size_t n = diffs.size();
    // Ranks of |d| with mean ranks for ties, doubled so they stay integral.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) {
        return std::fabs(diffs[i]) < std::fabs(diffs[j]);
    });
    std::vector<long> rank2(n, 0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n &&
               std::fabs(diffs[order[j + 1]]) == std::fabs(diffs[order[i]]))
            ++j;
        long mean2 = static_cast<long>(i + 1 + j + 1); // 2 * mean rank of the block
        for (size_t k = i; k <= j; ++k) rank2[order[k]] = mean2;
        i = j + 1;
    }

    long w2 = 0, total2 = 0;
    for (size_t k = 0; k < n; ++k) {
        total2 += rank2[k];
        if (diffs[k] > 0) w2 += rank2[k];
    }

    // Exact null distribution of the doubled positive-rank sum: each rank is
    // included with probability 1/2.
    std::vector<double> dist(static_cast<size_t>(total2) + 1, 0.0);
    dist[0] = 1.0;
    long filled = 0;
    for (size_t k = 0; k < n; ++k) {
        long r = rank2[k];
        for (long s = filled; s >= 0; --s) {
            if (dist[static_cast<size_t>(s)] == 0.0) continue;
            dist[static_cast<size_t>(s + r)] += dist[static_cast<size_t>(s)];
        }
        filled += r;
    }
    double norm = std::pow(2.0, static_cast<double>(n));
    double p_le = 0.0, p_ge = 0.0;
    for (long s = 0; s <= total2; ++s) {
        if (s <= w2) p_le += dist[static_cast<size_t>(s)];
        if (s >= w2) p_ge += dist[static_cast<size_t>(s)];
    }
    double p = 2.0 * std::min(p_le, p_ge) / norm;
    return std::min(p, 1.0);
}

} // namespace kgec
