#include "carnot/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include "carnot/calculus.hpp"
#include "carnot/errors.hpp"
#include "carnot/lsh.hpp"
#include "carnot/parallel.hpp"
#include "carnot/stats.hpp"

namespace carnot {

namespace {

using Columns = std::vector<std::vector<double>>;
using RowFn = std::function<void(DerivativeEvaluator&, std::span<const double>, std::span<double>)>;

// One column per integrand, already multiplied by the sample weights.
Columns sample_columns(const HeatSampleBatch& batch, std::size_t k, const RowFn& row) {
    const std::size_t n = batch.size();
    Columns cols(k, std::vector<double>(n));
    std::vector<std::string> failure(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        DerivativeEvaluator ev(batch.group());
        std::vector<double> out(k);
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                row(ev, batch.row(i), out);
            } catch (const DomainError& e) {
                failure[i] = e.what();
                continue;
            }
            const double w = batch.weight(i);
            for (std::size_t c = 0; c < k; ++c) {
                cols[c][i] = w * out[c];
            }
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (!failure[i].empty()) {
            throw DomainError(failure[i] + " (sample " + std::to_string(i) + ")", i);
        }
    }
    return cols;
}

void require_field(const ScalarField& f, const HeatSampleBatch& batch) {
    if (f.max_variable() >= static_cast<int>(batch.dimension())) {
        throw StructuralError("field references a coordinate outside the algebra");
    }
    if (batch.size() < 2) {
        throw ParameterError("need at least two samples");
    }
}

double xlogx(double v) {
    if (v > 0.0) {
        return v * std::log(v);
    }
    if (v == 0.0) {
        return 0.0;
    }
    throw DomainError("f log f needs f >= 0, got f = " + std::to_string(v));
}

double positive(double v, const char* what) {
    if (!(v > 0.0)) {
        throw DomainError(std::string(what) + " needs f > 0, got f = " + std::to_string(v));
    }
    return v;
}

// Derivative of A log A, treating 0 log 0 as 0.
double dxlogx(double a) { return a > 0.0 ? std::log(a) + 1.0 : 0.0; }
double xlogx_mean(double a) { return a > 0.0 ? a * std::log(a) : 0.0; }

void tail_guard(CheckReport& r, const Columns& cols, const std::vector<std::string>& names, const Thresholds& thr) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const double share = stats::top_share(cols[c], thr.tail_fraction);
        if (share > thr.tail_share) {
            r.verdict = Verdict::inconclusive;
            r.notes.push_back("inconclusive: heavy tail in " + names[c] + " (top " +
                              std::to_string(thr.tail_fraction) + " of samples carry " + std::to_string(share) +
                              " of the mass)");
        }
    }
}

nlohmann::json batch_params(const HeatSampleBatch& batch) {
    nlohmann::json j{{"s", batch.s()}, {"n", batch.size()}};
    if (batch.weighted()) {
        j["tilt"] = batch.params().tilt;
    }
    return j;
}

Estimate delta(const stats::ColumnMoments& m, double value, std::vector<double> grad) {
    return {value, m.delta_stderr(grad)};
}

}  // namespace

std::string_view to_string(Functional f) {
    switch (f) {
        case Functional::mean:
            return "mean";
        case Functional::lp_norm:
            return "lp_norm";
        case Functional::f_log_f:
            return "f_log_f";
        case Functional::entropy:
            return "entropy";
        case Functional::dirichlet:
            return "dirichlet";
        case Functional::gradient_sq:
            return "gradient_sq";
        case Functional::euler:
            return "euler";
        case Functional::laplacian:
            return "laplacian";
    }
    return "mean";
}

Functional functional_from_string(std::string_view name) {
    for (auto f : {Functional::mean, Functional::lp_norm, Functional::f_log_f, Functional::entropy,
                   Functional::dirichlet, Functional::gradient_sq, Functional::euler, Functional::laplacian}) {
        if (to_string(f) == name) {
            return f;
        }
    }
    throw StructuralError("unknown functional '" + std::string(name) + "'");
}

nlohmann::json FunctionalEstimate::to_json() const {
    return {{"functional", to_string(functional)}, {"value", value}, {"stderr", stderr}, {"n", n}, {"params", params}};
}

FunctionalEstimate estimate(Functional id, const ScalarField& f, const HeatSampleBatch& batch, double p) {
    require_field(f, batch);
    if (id == Functional::lp_norm && !(p > 0.0 && std::isfinite(p))) {
        throw ParameterError("lp_norm needs 0 < p < infinity");
    }
    const bool needs_derivatives =
        id == Functional::dirichlet || id == Functional::gradient_sq || id == Functional::euler ||
        id == Functional::laplacian;
    const std::size_t k = id == Functional::entropy ? 2 : 1;
    const Columns cols = sample_columns(batch, k, [&](DerivativeEvaluator& ev, auto x, auto out) {
        if (!needs_derivatives) {
            const double v = f(x);
            switch (id) {
                case Functional::mean:
                    out[0] = v;
                    break;
                case Functional::lp_norm:
                    out[0] = std::pow(std::abs(v), p);
                    break;
                case Functional::f_log_f:
                    out[0] = xlogx(v);
                    break;
                default:
                    out[0] = v;
                    out[1] = xlogx(v);
            }
            return;
        }
        const auto d = ev.evaluate(f, x, id == Functional::euler);
        switch (id) {
            case Functional::dirichlet:
                out[0] = d.gradient_sq / positive(d.value, "|grad f|^2 / f");
                break;
            case Functional::gradient_sq:
                out[0] = d.gradient_sq;
                break;
            case Functional::euler:
                out[0] = d.euler;
                break;
            default:
                out[0] = d.laplacian;
        }
    });
    stats::ColumnMoments m(cols);
    FunctionalEstimate e;
    e.functional = id;
    e.n = batch.size();
    e.params = batch_params(batch);
    if (id == Functional::lp_norm) {
        const double a = m.mean(0);
        e.value = std::pow(a, 1.0 / p);
        e.stderr = a > 0.0 ? e.value / (p * a) * m.stderr_of_mean(0) : 0.0;
        e.params["p"] = p;
    } else if (id == Functional::entropy) {
        const double a = m.mean(0);
        e.value = m.mean(1) - xlogx_mean(a);
        e.stderr = m.delta_stderr(std::vector<double>{-dxlogx(a), 1.0});
    } else {
        e.value = m.mean(0);
        e.stderr = m.stderr_of_mean(0);
    }
    return e;
}

double janson_time(double c, double p, double q) {
    if (!(p > 0.0) || !(q >= p) || !std::isfinite(q)) {
        throw ParameterError("janson_time needs 0 < p <= q < infinity");
    }
    return c * std::log(q / p);
}

double defect_factor(double beta, double p, double q) {
    if (!(p > 0.0) || !(q >= p) || !std::isfinite(q)) {
        throw ParameterError("defect_factor needs 0 < p <= q < infinity");
    }
    return std::exp(beta * (1.0 / p - 1.0 / q));
}

CheckReport check_time_space(const ScalarField& f, const HeatSampleBatch& batch, const Thresholds& thr) {
    require_field(f, batch);
    const double s = batch.s();
    const Columns cols = sample_columns(batch, 2, [&](DerivativeEvaluator& ev, auto x, auto out) {
        const auto d = ev.evaluate(f, x, true);
        out[0] = d.euler;
        out[1] = d.laplacian;
    });
    stats::ColumnMoments m(cols);
    const Estimate lhs{m.mean(0), m.stderr_of_mean(0)};
    const Estimate rhs{0.5 * s * m.mean(1), 0.5 * s * m.stderr_of_mean(1)};
    CheckReport r = equality_report("time_space", lhs, rhs, m.delta_stderr(std::vector<double>{-1.0, 0.5 * s}), thr);
    r.params = batch_params(batch);
    r.params["field"] = f.to_string();
    tail_guard(r, cols, {"Ef", "Delta f"}, thr);
    return r;
}

CheckReport check_lsi(const ScalarField& f, const HeatSampleBatch& batch, double c, double beta, LsiForm form,
                      const Thresholds& thr) {
    require_field(f, batch);
    if (!(c >= 0.0) || !(beta >= 0.0)) {
        throw ParameterError("check_lsi needs c >= 0 and beta >= 0");
    }
    const double s = batch.s();
    Columns cols;
    std::vector<std::string> names;
    if (form == LsiForm::l1) {
        names = {"f", "f log f", "|grad f|^2 / f"};
        cols = sample_columns(batch, 3, [&](DerivativeEvaluator& ev, auto x, auto out) {
            const auto d = ev.evaluate(f, x, false);
            out[0] = d.value;
            out[1] = xlogx(d.value);
            out[2] = d.gradient_sq / positive(d.value, "|grad f|^2 / f");
        });
    } else {
        names = {"f^2", "f^2 log|f|", "|grad f|^2"};
        cols = sample_columns(batch, 3, [&](DerivativeEvaluator& ev, auto x, auto out) {
            const auto d = ev.evaluate(f, x, false);
            out[0] = d.value * d.value;
            out[1] = 0.5 * xlogx(d.value * d.value);
            out[2] = d.gradient_sq;
        });
    }
    stats::ColumnMoments m(cols);
    const double a = m.mean(0);
    const double b = m.mean(1);
    const double dir = m.mean(2);
    Estimate lhs;
    Estimate rhs;
    std::vector<double> grad;
    if (form == LsiForm::l1) {
        const double k = c * s / 2.0;
        lhs = delta(m, b - xlogx_mean(a), {-dxlogx(a), 1.0, 0.0});
        rhs = delta(m, k * dir + beta * a, {beta, 0.0, k});
        grad = {beta + dxlogx(a), -1.0, k};
    } else {
        const double k = c * s;
        lhs = delta(m, b - 0.5 * xlogx_mean(a), {-0.5 * dxlogx(a), 1.0, 0.0});
        rhs = delta(m, k * dir + 0.5 * beta * a, {0.5 * beta, 0.0, k});
        grad = {0.5 * beta + 0.5 * dxlogx(a), -1.0, k};
    }
    CheckReport r = inequality_report(form == LsiForm::l1 ? "lsi" : "lsi_l2", lhs, rhs, m.delta_stderr(grad), thr);
    r.params = batch_params(batch);
    r.params.update({{"c", c}, {"beta", beta}, {"form", form == LsiForm::l1 ? "L1" : "L2"}, {"field", f.to_string()}});
    tail_guard(r, cols, names, thr);
    return r;
}

CheckReport check_slsi(const ScalarField& f, const HeatSampleBatch& batch, double c, double beta,
                       const Thresholds& thr) {
    require_field(f, batch);
    if (!(c >= 0.0) || !(beta >= 0.0)) {
        throw ParameterError("check_slsi needs c >= 0 and beta >= 0");
    }
    const Columns cols = sample_columns(batch, 3, [&](DerivativeEvaluator& ev, auto x, auto out) {
        const auto d = ev.evaluate(f, x, true);
        out[0] = d.value;
        out[1] = xlogx(d.value);
        out[2] = d.euler;
    });
    stats::ColumnMoments m(cols);
    const double a = m.mean(0);
    const Estimate lhs = delta(m, m.mean(1) - xlogx_mean(a), {-dxlogx(a), 1.0, 0.0});
    const Estimate rhs = delta(m, c * m.mean(2) + beta * a, {beta, 0.0, c});
    CheckReport r = inequality_report("slsi", lhs, rhs, m.delta_stderr(std::vector<double>{beta + dxlogx(a), -1.0, c}),
                                      thr);
    r.params = batch_params(batch);
    r.params.update({{"c", c}, {"beta", beta}, {"field", f.to_string()}});

    std::vector<GroupElement> points;
    for (std::size_t i = 0; i < std::min<std::size_t>(batch.size(), 1000); ++i) {
        points.push_back(batch.element(i));
    }
    const LshVerdict lsh = check_lsh(batch.group(), f, points);
    r.params["lsh"] = to_string(lsh.status);
    if (!lsh.consistent()) {
        r.notes.push_back("warning: f is not LSH-consistent on the batch points; sLSI is only asserted for LSH f");
    }
    tail_guard(r, cols, {"f", "f log f", "Ef"}, thr);
    return r;
}

CheckReport check_lsi_implies_slsi_chain(const ScalarField& f, const HeatSampleBatch& batch, const Thresholds& thr) {
    require_field(f, batch);
    const double s = batch.s();
    const Columns cols = sample_columns(batch, 3, [&](DerivativeEvaluator& ev, auto x, auto out) {
        const auto d = ev.evaluate(f, x, true);
        out[0] = d.gradient_sq / positive(d.value, "|grad f|^2 / f");
        out[1] = d.laplacian;
        out[2] = d.euler;
    });
    stats::ColumnMoments m(cols);
    CheckReport ineq = inequality_report("dirichlet_le_laplacian", {m.mean(0), m.stderr_of_mean(0)},
                                         {m.mean(1), m.stderr_of_mean(1)},
                                         m.delta_stderr(std::vector<double>{-1.0, 1.0, 0.0}), thr);
    CheckReport eq = equality_report("time_space", {m.mean(2), m.stderr_of_mean(2)},
                                     {0.5 * s * m.mean(1), 0.5 * s * m.stderr_of_mean(1)},
                                     m.delta_stderr(std::vector<double>{0.0, 0.5 * s, -1.0}), thr);
    CheckReport r = ineq;
    r.check = "lsi_implies_slsi_chain";
    r.verdict = combine({ineq, eq});
    r.parts = {ineq, eq};
    r.params = batch_params(batch);
    r.params["field"] = f.to_string();
    tail_guard(r, cols, {"|grad f|^2 / f", "Delta f", "Ef"}, thr);
    return r;
}

CheckReport check_shc(const ScalarField& f, const HeatSampleBatch& batch, double p, double q, double t, double c,
                      double beta, bool exploratory, const Thresholds& thr) {
    require_field(f, batch);
    if (!(p > 0.0) || !(q >= p) || !std::isfinite(q)) {
        throw ParameterError("check_shc needs 0 < p <= q < infinity");
    }
    if (!(c >= 0.0) || !(beta >= 0.0) || !std::isfinite(t)) {
        throw ParameterError("check_shc needs c >= 0, beta >= 0 and finite t");
    }
    const double tj = janson_time(c, p, q);
    if (t < tj - 1e-12 * std::max(1.0, tj) && !exploratory) {
        throw ParameterError("check_shc: t = " + std::to_string(t) + " is below Janson's time " + std::to_string(tj) +
                             " (pass exploratory to allow it)");
    }
    const double big_m = defect_factor(beta, p, q);
    const ScalarField g = dilation_pullback(batch.group(), f, t);
    const Columns cols = sample_columns(batch, 2, [&](DerivativeEvaluator&, auto x, auto out) {
        out[0] = std::pow(std::abs(g(x)), q);
        out[1] = std::pow(std::abs(f(x)), p);
    });
    stats::ColumnMoments m(cols);
    const double a = m.mean(0);
    const double b = m.mean(1);
    const double lhs_v = std::pow(a, 1.0 / q);
    const double rhs_v = big_m * std::pow(b, 1.0 / p);
    const double dl = lhs_v / (q * a);
    const double dr = rhs_v / (p * b);
    const Estimate lhs = delta(m, lhs_v, {dl, 0.0});
    const Estimate rhs = delta(m, rhs_v, {0.0, dr});
    CheckReport r = inequality_report("shc", lhs, rhs, m.delta_stderr(std::vector<double>{-dl, dr}), thr);
    const double ratio = lhs_v / rhs_v;
    r.exploratory = exploratory;
    r.params = batch_params(batch);
    r.params.update({{"p", p},
                     {"q", q},
                     {"t", t},
                     {"c", c},
                     {"beta", beta},
                     {"M", big_m},
                     {"t_J", tj},
                     {"field", f.to_string()},
                     {"ratio", Estimate{ratio, m.delta_stderr(std::vector<double>{ratio / (q * a), -ratio / (p * b)})}
                                   .to_json()}});
    if (t < tj) {
        r.notes.push_back("t is below Janson's time; exploratory run");
    }
    tail_guard(r, cols, {"|e^{-tE} f|^q", "|f|^p"}, thr);
    return r;
}

namespace {

// Checks value[i+1] <= value[i] with value[i] = h(mean of column i).
Curve monotone_curve(std::string name, const std::vector<double>& ts, const Columns& cols,
                     const std::function<double(std::size_t, double)>& h,
                     const std::function<double(std::size_t, double)>& dh, const Thresholds& thr) {
    stats::ColumnMoments m(cols);
    const std::size_t k = ts.size();
    Curve curve;
    std::vector<double> grad(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        std::fill(grad.begin(), grad.end(), 0.0);
        grad[i] = dh(i, m.mean(i));
        curve.points.push_back({ts[i], h(i, m.mean(i)), m.delta_stderr(grad)});
    }
    std::vector<CheckReport> parts;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        std::fill(grad.begin(), grad.end(), 0.0);
        grad[i] = dh(i, m.mean(i));
        grad[i + 1] = -dh(i + 1, m.mean(i + 1));
        CheckReport part = inequality_report("t=" + std::to_string(ts[i + 1]) + " vs t=" + std::to_string(ts[i]),
                                             {curve.points[i + 1].value, curve.points[i + 1].stderr},
                                             {curve.points[i].value, curve.points[i].stderr}, m.delta_stderr(grad),
                                             thr);
        parts.push_back(std::move(part));
    }
    CheckReport r;
    if (!parts.empty()) {
        const auto worst = std::min_element(parts.begin(), parts.end(),
                                            [](const CheckReport& x, const CheckReport& y) { return x.z < y.z; });
        r = *worst;
    } else {
        r.verdict = Verdict::holds;
    }
    r.check = std::move(name);
    r.verdict = combine(parts);
    r.parts = std::move(parts);
    r.params["t"] = ts;
    curve.report = std::move(r);
    return curve;
}

void check_grid(const std::vector<double>& ts) {
    if (ts.empty()) {
        throw ParameterError("t grid is empty");
    }
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!(ts[i] >= 0.0) || !std::isfinite(ts[i]) || (i > 0 && !(ts[i] > ts[i - 1]))) {
            throw ParameterError("t grid must be finite, non-negative and strictly increasing");
        }
    }
}

}  // namespace

void Curve::write_csv(std::ostream& out) const {
    out << "t,value,stderr\n";
    out.precision(17);
    for (const auto& p : points) {
        out << p.t << ',' << p.value << ',' << p.stderr << '\n';
    }
}

std::vector<double> alpha_grid(double c, double q, std::size_t points) {
    const double tj = janson_time(c, 1.0, q);
    if (points < 2) {
        throw ParameterError("alpha grid needs at least two points");
    }
    std::vector<double> ts(points);
    for (std::size_t i = 0; i < points; ++i) {
        ts[i] = tj * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return ts;
}

Curve sweep_alpha(const ScalarField& f, const HeatSampleBatch& batch, double c, double beta,
                  const std::vector<double>& ts, const Thresholds& thr) {
    require_field(f, batch);
    check_grid(ts);
    if (!(c > 0.0) || !(beta >= 0.0)) {
        throw ParameterError("sweep_alpha needs c > 0 and beta >= 0");
    }
    std::vector<ScalarField> pulled;
    std::vector<double> r;
    std::vector<double> big_m;
    for (double t : ts) {
        pulled.push_back(dilation_pullback(batch.group(), f, t));
        r.push_back(std::exp(t / c));
        big_m.push_back(std::exp(beta * (1.0 - std::exp(-t / c))));
    }
    const Columns cols = sample_columns(batch, ts.size(), [&](DerivativeEvaluator&, auto x, auto out) {
        for (std::size_t i = 0; i < pulled.size(); ++i) {
            out[i] = std::pow(std::abs(pulled[i](x)), r[i]);
        }
    });
    std::vector<std::string> names;
    for (double t : ts) {
        names.push_back("|e^{-tE} f|^r at t=" + std::to_string(t));
    }
    Curve curve = monotone_curve(
        "alpha_monotone", ts, cols, [&](std::size_t i, double a) { return std::pow(a, 1.0 / r[i]) / big_m[i]; },
        [&](std::size_t i, double a) { return a > 0.0 ? std::pow(a, 1.0 / r[i]) / big_m[i] / (r[i] * a) : 0.0; },
        thr);
    curve.report.params.update(batch_params(batch));
    curve.report.params.update({{"c", c}, {"beta", beta}, {"field", f.to_string()}});
    tail_guard(curve.report, cols, names, thr);
    return curve;
}

Curve check_l1_contractivity(const ScalarField& f, const HeatSampleBatch& batch, const std::vector<double>& ts,
                             const Thresholds& thr) {
    require_field(f, batch);
    check_grid(ts);
    std::vector<ScalarField> pulled;
    for (double t : ts) {
        pulled.push_back(dilation_pullback(batch.group(), f, t));
    }
    const Columns cols = sample_columns(batch, ts.size(), [&](DerivativeEvaluator&, auto x, auto out) {
        for (std::size_t i = 0; i < pulled.size(); ++i) {
            out[i] = std::abs(pulled[i](x));
        }
    });
    std::vector<std::string> names;
    for (double t : ts) {
        names.push_back("|e^{-tE} f| at t=" + std::to_string(t));
    }
    Curve curve = monotone_curve(
        "l1_contractivity", ts, cols, [](std::size_t, double a) { return a; }, [](std::size_t, double) { return 1.0; },
        thr);
    curve.report.params.update(batch_params(batch));
    curve.report.params["field"] = f.to_string();
    tail_guard(curve.report, cols, names, thr);
    return curve;
}

}  // namespace carnot
