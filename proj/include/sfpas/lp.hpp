#pragma once

#include "sfpas/rational.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sfpas::lp {

enum class Relation { LessEqual, Equal, GreaterEqual };
enum class VariableKind { NonNegative, Free };
enum class Status { Optimal, Infeasible, Unbounded };

struct Constraint {
    std::vector<Rational> coeffs;
    Relation relation;
    Rational rhs;
};

struct Solution {
    Status status = Status::Infeasible;
    Rational objective;
    std::vector<Rational> x;
};

/// Exact linear program: maximize c.x subject to linear constraints.
/// Solved by a dense two-phase tableau simplex with Bland's rule, so it
/// terminates and is deterministic.
class Problem {
public:
    explicit Problem(std::size_t variables, VariableKind kind = VariableKind::NonNegative)
        : kinds_(variables, kind), objective_(variables) {}

    std::size_t variables() const { return kinds_.size(); }

    void set_kind(std::size_t var, VariableKind kind) { kinds_.at(var) = kind; }

    void set_objective(std::vector<Rational> c) {
        if (c.size() != variables()) throw std::invalid_argument("lp: objective size mismatch");
        objective_ = std::move(c);
    }

    void add(std::vector<Rational> coeffs, Relation rel, Rational rhs) {
        if (coeffs.size() != variables()) throw std::invalid_argument("lp: constraint size mismatch");
        constraints_.push_back({std::move(coeffs), rel, std::move(rhs)});
    }

    Solution maximize() const;

private:
    std::vector<VariableKind> kinds_;
    std::vector<Rational> objective_;
    std::vector<Constraint> constraints_;
};

namespace detail {

// Tableau with rows 0..m-1 for constraints; basis[i] is the column basic
// in row i. The last column holds the right-hand side.
struct Tableau {
    std::size_t rows = 0, cols = 0;  // cols excludes the rhs column
    std::vector<std::vector<Rational>> a;
    std::vector<std::size_t> basis;

    Rational& rhs(std::size_t i) { return a[i][cols]; }

    void pivot(std::size_t r, std::size_t c) {
        Rational inv = Rational(1) / a[r][c];
        for (auto& x : a[r]) x *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || a[i][c] == 0) continue;
            Rational f = a[i][c];
            for (std::size_t j = 0; j <= cols; ++j)
                if (a[r][j] != 0) a[i][j] -= f * a[r][j];
        }
        basis[r] = c;
    }

    // Maximizes obj.x over the current basis; obj has `cols` entries and
    // columns with allowed[j] == false never enter.
    // Returns false if unbounded.
    bool optimize(const std::vector<Rational>& obj, const std::vector<bool>& allowed) {
        for (;;) {
            // Reduced costs: obj_j - sum_i obj_{basis i} a[i][j].
            std::optional<std::size_t> enter;
            for (std::size_t j = 0; j < cols && !enter; ++j) {
                if (!allowed[j]) continue;
                bool basic = false;
                for (auto b : basis)
                    if (b == j) basic = true;
                if (basic) continue;
                Rational reduced = obj[j];
                for (std::size_t i = 0; i < rows; ++i)
                    if (a[i][j] != 0) reduced -= obj[basis[i]] * a[i][j];
                if (reduced > 0) enter = j;  // Bland: lowest index
            }
            if (!enter) return true;
            const std::size_t c = *enter;
            std::optional<std::size_t> leave;
            Rational best;
            for (std::size_t i = 0; i < rows; ++i) {
                if (a[i][c] <= 0) continue;
                Rational ratio = a[i][cols] / a[i][c];
                if (!leave || ratio < best || (ratio == best && basis[i] < basis[*leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (!leave) return false;
            pivot(*leave, c);
        }
    }
};

}  // namespace detail

inline Solution Problem::maximize() const {
    // Column layout: one column per nonnegative variable, two per free
    // variable (x+ and x-), then one slack/surplus per inequality, then
    // one artificial per row.
    std::vector<std::size_t> pos_col(variables()), neg_col(variables(), SIZE_MAX);
    std::size_t cols = 0;
    for (std::size_t v = 0; v < variables(); ++v) {
        pos_col[v] = cols++;
        if (kinds_[v] == VariableKind::Free) neg_col[v] = cols++;
    }
    std::vector<std::size_t> slack_col(constraints_.size(), SIZE_MAX);
    for (std::size_t i = 0; i < constraints_.size(); ++i)
        if (constraints_[i].relation != Relation::Equal) slack_col[i] = cols++;
    const std::size_t first_artificial = cols;
    const std::size_t m = constraints_.size();
    cols += m;

    detail::Tableau t;
    t.rows = m;
    t.cols = cols;
    t.a.assign(m, std::vector<Rational>(cols + 1));
    t.basis.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        const Constraint& con = constraints_[i];
        Rational flip = con.rhs < 0 ? Rational(-1) : Rational(1);
        for (std::size_t v = 0; v < variables(); ++v) {
            t.a[i][pos_col[v]] = flip * con.coeffs[v];
            if (neg_col[v] != SIZE_MAX) t.a[i][neg_col[v]] = -flip * con.coeffs[v];
        }
        if (slack_col[i] != SIZE_MAX)
            t.a[i][slack_col[i]] = flip * (con.relation == Relation::LessEqual ? Rational(1) : Rational(-1));
        t.a[i][first_artificial + i] = 1;
        t.a[i][cols] = flip * con.rhs;
        t.basis[i] = first_artificial + i;
    }

    // Phase 1: maximize -(sum of artificials).
    std::vector<Rational> phase1(cols);
    for (std::size_t j = first_artificial; j < cols; ++j) phase1[j] = -1;
    std::vector<bool> allow_all(cols, true);
    t.optimize(phase1, allow_all);
    Rational infeasibility = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (t.basis[i] >= first_artificial) infeasibility += t.a[i][cols];
    Solution sol;
    if (infeasibility != 0) {
        sol.status = Status::Infeasible;
        return sol;
    }
    // Drive remaining (zero-valued) artificials out of the basis.
    for (std::size_t i = 0; i < m; ++i) {
        if (t.basis[i] < first_artificial) continue;
        for (std::size_t j = 0; j < first_artificial; ++j)
            if (t.a[i][j] != 0) {
                t.pivot(i, j);
                break;
            }
    }

    // Phase 2.
    std::vector<Rational> phase2(cols);
    for (std::size_t v = 0; v < variables(); ++v) {
        phase2[pos_col[v]] = objective_[v];
        if (neg_col[v] != SIZE_MAX) phase2[neg_col[v]] = -objective_[v];
    }
    std::vector<bool> allowed(cols, true);
    for (std::size_t j = first_artificial; j < cols; ++j) allowed[j] = false;
    if (!t.optimize(phase2, allowed)) {
        sol.status = Status::Unbounded;
        return sol;
    }

    std::vector<Rational> column_value(cols);
    for (std::size_t i = 0; i < m; ++i) column_value[t.basis[i]] = t.a[i][cols];
    sol.status = Status::Optimal;
    sol.x.resize(variables());
    for (std::size_t v = 0; v < variables(); ++v) {
        sol.x[v] = column_value[pos_col[v]];
        if (neg_col[v] != SIZE_MAX) sol.x[v] -= column_value[neg_col[v]];
    }
    sol.objective = 0;
    for (std::size_t v = 0; v < variables(); ++v) sol.objective += objective_[v] * sol.x[v];
    return sol;
}

/// Feasibility only (zero objective).
inline std::optional<std::vector<Rational>> find_feasible(Problem p) {
    p.set_objective(std::vector<Rational>(p.variables()));
    Solution s = p.maximize();
    if (s.status != Status::Optimal) return std::nullopt;
    return s.x;
}

}  // namespace sfpas::lp
