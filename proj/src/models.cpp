#include "kgec/models.hpp"
#include "kgec/errors.hpp"

#include <cmath>
#include <numbers>

namespace kgec {

namespace {

void check_triple(const EmbeddingState& state, const ModelConfig& model, const Triple& t) {
    if (t.head < 0 || t.head >= state.num_entities() || t.tail < 0 ||
        t.tail >= state.num_entities() || t.relation < 0 ||
        t.relation >= state.num_relations())
        throw ContractViolation("triple ids out of range for embedding state");
    if (model.kind == ModelKind::RotatE && state.dim % 2 != 0)
        throw ConfigError("rotate requires an even embedding dimension");
}

// d||x||_p / dx with the subgradient-0 convention at non-smooth points.
void norm_gradient(const std::vector<double>& delta, int p, std::vector<double>& g) {
    size_t d = delta.size();
    g.assign(d, 0.0);
    if (p == 1) {
        for (size_t k = 0; k < d; ++k)
            g[k] = delta[k] > 0 ? 1.0 : (delta[k] < 0 ? -1.0 : 0.0);
    } else {
        double norm = 0.0;
        for (double x : delta) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0)
            for (size_t k = 0; k < d; ++k) g[k] = delta[k] / norm;
    }
}

double norm_value(const std::vector<double>& delta, int p) {
    double acc = 0.0;
    if (p == 1) {
        for (double x : delta) acc += std::fabs(x);
        return acc;
    }
    for (double x : delta) acc += x * x;
    return std::sqrt(acc);
}

// TransH projection direction: the stored normal, unit-normalized.
std::vector<double> unit_normal(std::span<const double> w) {
    std::vector<double> u(w.begin(), w.end());
    double norm = 0.0;
    for (double x : u) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0)
        for (double& x : u) x /= norm;
    return u;
}

} // namespace

double score(const ModelConfig& model, const EmbeddingState& state, const Triple& t) {
    check_triple(state, model, t);
    const int d = state.dim;
    auto h = state.entity_row(t.head);
    auto r = state.relation_row(t.relation);
    auto tl = state.entity_row(t.tail);

    switch (model.kind) {
    case ModelKind::TransE: {
        std::vector<double> delta(static_cast<size_t>(d));
        for (int k = 0; k < d; ++k) delta[k] = h[k] + r[k] - tl[k];
        return -norm_value(delta, model.norm_p);
    }
    case ModelKind::TransH: {
        auto u = unit_normal(state.aux_row(t.relation));
        double uh = 0.0, ut = 0.0;
        for (int k = 0; k < d; ++k) {
            uh += u[k] * h[k];
            ut += u[k] * tl[k];
        }
        std::vector<double> delta(static_cast<size_t>(d));
        for (int k = 0; k < d; ++k)
            delta[k] = (h[k] - uh * u[k]) + r[k] - (tl[k] - ut * u[k]);
        return -norm_value(delta, model.norm_p);
    }
    case ModelKind::DistMult: {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) acc += h[k] * r[k] * tl[k];
        return acc;
    }
    case ModelKind::RotatE: {
        const int m = d / 2;
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
            double c = std::cos(r[j]), s = std::sin(r[j]);
            double re = h[2 * j] * c - h[2 * j + 1] * s - tl[2 * j];
            double im = h[2 * j] * s + h[2 * j + 1] * c - tl[2 * j + 1];
            acc += re * re + im * im;
        }
        return -std::sqrt(acc);
    }
    }
    throw ConfigError("unreachable model kind");
}

TripleGradients score_gradients(const ModelConfig& model, const EmbeddingState& state,
                                const Triple& t) {
    check_triple(state, model, t);
    const int d = state.dim;
    auto h = state.entity_row(t.head);
    auto r = state.relation_row(t.relation);
    auto tl = state.entity_row(t.tail);

    TripleGradients g;
    g.head.assign(static_cast<size_t>(d), 0.0);
    g.relation.assign(static_cast<size_t>(d), 0.0);
    g.tail.assign(static_cast<size_t>(d), 0.0);

    switch (model.kind) {
    case ModelKind::TransE: {
        std::vector<double> delta(static_cast<size_t>(d)), gn;
        for (int k = 0; k < d; ++k) delta[k] = h[k] + r[k] - tl[k];
        norm_gradient(delta, model.norm_p, gn);
        for (int k = 0; k < d; ++k) {
            g.head[k] = -gn[k];
            g.relation[k] = -gn[k];
            g.tail[k] = gn[k];
        }
        break;
    }
    case ModelKind::TransH: {
        auto w = state.aux_row(t.relation);
        double wnorm = 0.0;
        for (double x : w) wnorm += x * x;
        wnorm = std::sqrt(wnorm);
        auto u = unit_normal(w);

        std::vector<double> a(static_cast<size_t>(d)); // h - t
        double ua = 0.0;
        for (int k = 0; k < d; ++k) {
            a[k] = h[k] - tl[k];
            ua += u[k] * a[k];
        }
        std::vector<double> delta(static_cast<size_t>(d)), gn;
        for (int k = 0; k < d; ++k) delta[k] = a[k] - ua * u[k] + r[k];
        norm_gradient(delta, model.norm_p, gn);

        double gu = 0.0;
        for (int k = 0; k < d; ++k) gu += gn[k] * u[k];
        for (int k = 0; k < d; ++k) {
            double proj = gn[k] - gu * u[k]; // (I - uu^T) gn
            g.head[k] = -proj;
            g.tail[k] = proj;
            g.relation[k] = -gn[k];
        }
        // d(score)/du, then pulled back through u = w/||w||.
        std::vector<double> du(static_cast<size_t>(d));
        for (int k = 0; k < d; ++k) du[k] = a[k] * gu + ua * gn[k];
        double udu = 0.0;
        for (int k = 0; k < d; ++k) udu += u[k] * du[k];
        g.aux.assign(static_cast<size_t>(d), 0.0);
        if (wnorm > 0)
            for (int k = 0; k < d; ++k) g.aux[k] = (du[k] - udu * u[k]) / wnorm;
        break;
    }
    case ModelKind::DistMult: {
        for (int k = 0; k < d; ++k) {
            g.head[k] = r[k] * tl[k];
            g.relation[k] = h[k] * tl[k];
            g.tail[k] = h[k] * r[k];
        }
        break;
    }
    case ModelKind::RotatE: {
        const int m = d / 2;
        std::vector<double> delta(static_cast<size_t>(d)), rot(static_cast<size_t>(d));
        double norm = 0.0;
        for (int j = 0; j < m; ++j) {
            double c = std::cos(r[j]), s = std::sin(r[j]);
            rot[2 * j] = h[2 * j] * c - h[2 * j + 1] * s;
            rot[2 * j + 1] = h[2 * j] * s + h[2 * j + 1] * c;
            delta[2 * j] = rot[2 * j] - tl[2 * j];
            delta[2 * j + 1] = rot[2 * j + 1] - tl[2 * j + 1];
            norm += delta[2 * j] * delta[2 * j] + delta[2 * j + 1] * delta[2 * j + 1];
        }
        norm = std::sqrt(norm);
        if (norm == 0) break; // subgradient 0 at the minimum
        for (int j = 0; j < m; ++j) {
            double c = std::cos(r[j]), s = std::sin(r[j]);
            double gre = delta[2 * j] / norm;
            double gim = delta[2 * j + 1] / norm;
            g.tail[2 * j] = gre;
            g.tail[2 * j + 1] = gim;
            g.head[2 * j] = -(gre * c + gim * s);
            g.head[2 * j + 1] = -(-gre * s + gim * c);
            g.relation[j] = gre * rot[2 * j + 1] - gim * rot[2 * j];
        }
        break;
    }
    }
    return g;
}

void normalize_relation_row(EmbeddingState& state, int relation, ModelKind kind) {
    if (kind != ModelKind::RotatE) return;
    auto r = state.relation_row(relation);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int j = 0; j < state.dim / 2; ++j) {
        double phase = std::fmod(r[j] + std::numbers::pi, two_pi);
        if (phase < 0) phase += two_pi;
        r[j] = phase - std::numbers::pi;
    }
}

} // namespace kgec
