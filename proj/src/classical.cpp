#include "polyscale/classical.hpp"

#include <cmath>

#include "polyscale/error.hpp"

namespace polyscale {

namespace {

struct Moments {
    double mean = 0;
    double sd = 0;
    std::size_t n = 0;
};

// Two-pass mean and sample SD of the present values.
Moments moments(const std::vector<std::optional<double>>& xs) {
    Moments mo;
    double sum = 0;
    for (const auto& x : xs)
        if (x) {
            sum += *x;
            ++mo.n;
        }
    if (mo.n < 2) return mo;
    mo.mean = sum / static_cast<double>(mo.n);
    double ss = 0;
    for (const auto& x : xs)
        if (x) ss += (*x - mo.mean) * (*x - mo.mean);
    mo.sd = std::sqrt(ss / static_cast<double>(mo.n - 1));
    return mo;
}

std::vector<std::size_t> resolve(const ResponseMatrix& m, const std::vector<std::string>& items) {
    std::vector<std::size_t> idx;
    if (items.empty()) {
        for (std::size_t i = 0; i < m.item_count(); ++i) idx.push_back(i);
    } else {
        for (const auto& id : items) idx.push_back(m.item_index(id));
    }
    return idx;
}

struct Composite {
    std::vector<std::optional<double>> scores;
    Moments mo;
};

Composite composite_b(const ResponseMatrix& m, const std::vector<std::size_t>& idx) {
    std::vector<std::optional<double>> x(m.persons());
    for (std::size_t n = 0; n < m.persons(); ++n) {
        double s = 0;
        bool any = false;
        for (auto i : idx)
            if (auto c = m.code(n, i)) {
                s += *c;
                any = true;
            }
        if (any) x[n] = s;
    }
    auto mo = moments(x);
    if (mo.n < 2) throw DataError("z_score.b needs at least two persons with a composite");
    if (!(mo.sd > 0)) throw DataError("z_score.b: composite scores have zero variance");
    for (auto& v : x)
        if (v) v = (*v - mo.mean) / mo.sd;
    return {std::move(x), mo};
}

struct PerItem {
    std::vector<std::optional<double>> scores;
    std::vector<Moments> item_moments;
};

PerItem composite_w(const ResponseMatrix& m, const std::vector<std::size_t>& idx) {
    PerItem out;
    for (auto i : idx) {
        std::vector<std::optional<double>> col(m.persons());
        for (std::size_t n = 0; n < m.persons(); ++n)
            if (auto c = m.code(n, i)) col[n] = *c;
        auto mo = moments(col);
        if (!(mo.sd > 0)) throw DataError("z_score.w: item '" + m.items[i].id + "' has zero variance");
        out.item_moments.push_back(mo);
    }
    out.scores.resize(m.persons());
    for (std::size_t n = 0; n < m.persons(); ++n) {
        double s = 0;
        int q = 0;
        for (std::size_t j = 0; j < idx.size(); ++j)
            if (auto c = m.code(n, idx[j])) {
                s += (*c - out.item_moments[j].mean) / out.item_moments[j].sd;
                ++q;
            }
        if (q > 0) out.scores[n] = s / q;
    }
    return out;
}

}  // namespace

std::vector<std::optional<double>> z_score_b(const ResponseMatrix& m, const std::vector<std::string>& items) {
    return composite_b(m, resolve(m, items)).scores;
}

std::vector<std::optional<double>> z_score_w(const ResponseMatrix& m, const std::vector<std::string>& items) {
    return composite_w(m, resolve(m, items)).scores;
}

ClassicalScores classical_scores(const ResponseMatrix& m, const std::vector<std::string>& items) {
    auto idx = resolve(m, items);
    auto b = composite_b(m, idx);
    auto w = composite_w(m, idx);
    ClassicalScores out;
    out.z_score_b = std::move(b.scores);
    out.z_score_w = std::move(w.scores);
    out.composite_mean = b.mo.mean;
    out.composite_sd = b.mo.sd;
    for (const auto& mo : w.item_moments) {
        out.item_means.push_back(mo.mean);
        out.item_sds.push_back(mo.sd);
    }
    return out;
}

}  // namespace polyscale
