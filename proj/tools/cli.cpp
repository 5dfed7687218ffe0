#include "cli.hpp"

#include "sfpas/sfpas.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace sfpas::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Logging

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
    const char* env = std::getenv("SFPAS_LOG");
    if (!env) return LogLevel::Warn;
    const std::string s(env);
    if (s == "error") return LogLevel::Error;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
}

class Log {
public:
    explicit Log(std::ostream& err) : err_(err), level_(log_level()) {}
    void operator()(LogLevel lvl, const std::string& msg) const {
        static const char* names[] = {"error", "warn", "info", "debug"};
        if (lvl <= level_) err_ << "sfpas[" << names[static_cast<int>(lvl)] << "] " << msg << '\n';
    }

private:
    std::ostream& err_;
    LogLevel level_;
};

// ---------------------------------------------------------------------------
// Input helpers

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open input file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput("malformed JSON in '" + path + "': " + e.what());
    }
}

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw InvalidInput(std::string("missing field '") + key + "'");
    return j.at(key);
}

std::size_t as_count(const json& j, const std::string& what) {
    if (!j.is_number_integer() || j.get<long long>() < 0) throw InvalidInput(what + " must be a nonnegative integer");
    return j.get<std::size_t>();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<Rational> parse_rational_list(const std::string& s) {
    std::vector<Rational> out;
    for (const auto& tok : split(s, ',')) out.push_back(parse_rational(trim(tok)));
    return out;
}

double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double d = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return d;
    } catch (const std::exception&) {
        throw InvalidInput("not a number: '" + s + "'");
    }
}

/// "p/q", "p/q+eps", "p/q-3eps", "eps".
family::EpsRational parse_eps(const std::string& text) {
    const std::string s = trim(text);
    const auto pos = s.find("eps");
    if (pos == std::string::npos) return {parse_rational(s)};
    if (pos + 3 != s.size()) throw InvalidInput("bad infinitesimal value '" + s + "'");
    std::size_t split_at = std::string::npos;
    for (std::size_t i = pos; i-- > 1;)
        if (s[i] == '+' || s[i] == '-') {
            split_at = i;
            break;
        }
    Rational value = 0;
    std::string coeff = s.substr(0, pos);
    if (split_at != std::string::npos) {
        value = parse_rational(trim(s.substr(0, split_at)));
        coeff = s.substr(split_at, pos - split_at);
    }
    coeff = trim(coeff);
    Rational c = 1;
    if (coeff == "-") c = -1;
    else if (!coeff.empty() && coeff != "+") c = parse_rational(coeff[0] == '+' ? coeff.substr(1) : coeff);
    return {value, c};
}

double decode_double(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return parse_rational(j.get<std::string>()).convert_to<double>();
    throw InvalidInput("expected a number, got " + j.dump());
}

FloatMatrix decode_float_matrix(const json& j, std::size_t rows, std::size_t cols) {
    if (!j.is_array() || j.size() != rows) throw InvalidInput("matrix must have " + std::to_string(rows) + " rows");
    FloatMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw InvalidInput("matrix must have " + std::to_string(cols) + " columns");
        for (std::size_t c = 0; c < cols; ++c) {
            const json& x = j[r][c];
            std::complex<double> z;
            if (x.is_object()) z = {x.contains("re") ? decode_double(x.at("re")) : 0.0, x.contains("im") ? decode_double(x.at("im")) : 0.0};
            else z = decode_double(x);
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = z;
        }
    }
    return m;
}

ordered_json oj(const json& j) { return ordered_json::parse(j.dump()); }

json json_int(const BigInt& x) {
    if (x >= BigInt(std::numeric_limits<std::int64_t>::min()) && x <= BigInt(std::numeric_limits<std::int64_t>::max()))
        return static_cast<std::int64_t>(x);
    return x.str();
}

// ---------------------------------------------------------------------------
// Quiver problems

struct LoadedQuiver {
    quiver::QuiverProblem problem;
    quiver::Level level;
    std::optional<quiver::FloatPoint> point;
};

LoadedQuiver load_quiver(const json& j) {
    const json& qj = field(j, "quiver");
    std::vector<std::string> names;
    for (const auto& v : field(qj, "vertices")) names.push_back(v.get<std::string>());
    quiver::Quiver q(names);
    for (const auto& a : field(qj, "arrows"))
        q.add_arrow(field(a, "id").get<std::string>(), field(a, "src").get<std::string>(), field(a, "dst").get<std::string>());

    quiver::QuiverDims dims;
    const json& dj = field(j, "dims");
    for (std::size_t v = 0; v < names.size(); ++v)
        dims.vertex_dim.push_back(as_count(dj.is_array() ? dj.at(v) : field(dj, names[v].c_str()), "dimension of " + names[v]));
    for (const auto& a : q.arrows()) {
        std::size_t tw = 1;
        if (j.contains("twists") && j.at("twists").contains(a.id)) tw = as_count(j.at("twists").at(a.id), "twist of " + a.id);
        dims.twist_dim.push_back(tw);
    }

    const json& sj = field(j, "symmetry");
    const std::string type = field(sj, "type").get<std::string>();
    quiver::SymmetrySpec sym;
    std::vector<std::size_t> order;  // symmetry vertices in file order
    if (type == "vertices") {
        quiver::FullVertexProduct full;
        for (const auto& v : field(sj, "vertices")) order.push_back(q.vertex_index(v.get<std::string>()));
        full.vertices = order;
        std::sort(full.vertices.begin(), full.vertices.end());
        sym = full;
    } else if (type == "torus") {
        sym = quiver::TorusKernel::from_weights(json_io::decode_rational_matrix(field(sj, "weights")));
    } else {
        throw InvalidInput("unknown symmetry type '" + type + "' (expected vertices or torus)");
    }

    quiver::QuiverProblem problem(q, dims, sym);
    quiver::Level level = quiver::zero_level(problem);
    if (j.contains("level")) {
        const json& lj = j.at("level");
        if (const auto* full = std::get_if<quiver::FullVertexProduct>(&problem.symmetry())) {
            for (std::size_t k = 0; k < full->vertices.size(); ++k) {
                const std::size_t v = full->vertices[k];
                if (lj.is_object()) {
                    level.values[k] = json_io::decode_rational(field(lj, names[v].c_str()));
                } else {
                    const auto pos = std::find(order.begin(), order.end(), v) - order.begin();
                    if (!lj.is_array() || static_cast<std::size_t>(pos) >= lj.size()) throw InvalidInput("level array too short");
                    level.values[k] = json_io::decode_rational(lj.at(static_cast<std::size_t>(pos)));
                }
            }
        } else {
            level.values = json_io::decode_rational_vector(lj);
        }
        problem.check_level(level);
    }

    std::optional<quiver::FloatPoint> point;
    if (j.contains("point")) {
        quiver::FloatPoint p;
        for (std::size_t a = 0; a < q.arrows().size(); ++a)
            p.maps.push_back(decode_float_matrix(field(j.at("point"), q.arrows()[a].id.c_str()), problem.rows_of(a), problem.cols_of(a)));
        point = std::move(p);
    }
    return {std::move(problem), std::move(level), std::move(point)};
}

ordered_json encode_point(const quiver::QuiverProblem& problem, const quiver::FloatPoint& p) {
    ordered_json out = ordered_json::object();
    for (std::size_t a = 0; a < p.maps.size(); ++a) out[problem.quiver().arrows()[a].id] = oj(json_io::encode_float(p.maps[a]));
    return out;
}

// ---------------------------------------------------------------------------
// Family inputs

family::FlagChain load_flag(const json& j) {
    family::FlagChain c;
    for (const auto& d : field(j, "dims")) c.dims.push_back(as_count(d, "flag dimension"));
    const json& maps = field(j, "maps");
    if (!maps.is_array() || maps.size() + 1 != c.dims.size()) throw InvalidInput("flag chain needs one map per consecutive pair");
    for (std::size_t i = 0; i < maps.size(); ++i)
        c.maps.push_back(json_io::decode_matrix(maps[i], static_cast<long>(c.dims[i + 1]), static_cast<long>(c.dims[i])));
    c.levels = json_io::decode_rational_vector(field(j, "levels"));
    c.validate();
    return c;
}

family::StrommeTriple load_triple(const json& j) {
    family::StrommeTriple t;
    t.u = as_count(field(j, "u"), "u");
    t.v = as_count(field(j, "v"), "v");
    t.w = as_count(field(j, "w"), "w");
    t.k = json_io::decode_matrix(field(j, "k"), static_cast<long>(t.v), static_cast<long>(t.u));
    t.l = json_io::decode_matrix(field(j, "l"), static_cast<long>(t.v), static_cast<long>(t.u));
    t.m = json_io::decode_matrix(field(j, "m"), static_cast<long>(t.v), static_cast<long>(t.w));
    t.validate();
    return t;
}

ordered_json encode_tuple(const ExactHermitianTuple& xi) {
    ordered_json out = ordered_json::array();
    for (const auto& b : xi.blocks) out.push_back(oj(json_io::encode(b)));
    return out;
}

// ---------------------------------------------------------------------------
// Toric inputs

struct LoadedToric {
    toric::ToricMatrix v;
    std::optional<toric::Fan> fan;
    std::optional<std::vector<Rational>> level;
};

std::vector<std::size_t> one_based(const json& j, std::size_t r, const std::string& what) {
    std::vector<std::size_t> out;
    for (const auto& x : j) {
        if (!x.is_number_integer() || x.get<long long>() < 1 || static_cast<std::size_t>(x.get<long long>()) > r)
            throw InvalidInput(what + " index " + x.dump() + " outside 1.." + std::to_string(r));
        out.push_back(x.get<std::size_t>() - 1);
    }
    return out;
}

LoadedToric load_toric(const json& j) {
    LoadedToric t{toric::ToricMatrix(json_io::decode_rational_matrix(field(j, "v"))), std::nullopt, std::nullopt};
    if (j.contains("max_cones")) {
        toric::Fan f;
        for (const auto& c : j.at("max_cones")) {
            auto cone = one_based(c, t.v.r(), "ray");
            f.max_cones.push_back(std::move(cone));
        }
        toric::check_fan_indices(f, t.v);
        t.fan = std::move(f);
    }
    if (j.contains("level_rep")) t.level = json_io::decode_rational_vector(j.at("level_rep"));
    return t;
}

ordered_json encode_cones(const toric::Fan& f) {
    ordered_json out = ordered_json::array();
    for (const auto& c : f.max_cones) {
        ordered_json cone = ordered_json::array();
        for (auto j : c) cone.push_back(j + 1);
        out.push_back(cone);
    }
    return out;
}

ordered_json encode_rationals(const std::vector<Rational>& v) {
    ordered_json out = ordered_json::array();
    for (const auto& x : v) out.push_back(to_string(x));
    return out;
}

std::string support_label(const std::vector<bool>& s) {
    std::string out;
    for (std::size_t j = 0; j < s.size(); ++j)
        if (s[j]) out += (out.empty() ? "" : ",") + std::to_string(j + 1);
    return out;
}

// ---------------------------------------------------------------------------
// Command plumbing

struct Outcome {
    ordered_json result;
    int exit_code = 0;
    std::optional<std::string> raw;  // non-JSON payload (CSV)
};

struct Context {
    std::string command;
    std::uint64_t seed = 0;
    ordered_json tolerances = ordered_json::object();
    ordered_json inputs = ordered_json::array();
    std::string out_path;
};

ordered_json provenance(const Context& ctx) {
    ordered_json p;
    p["tool"] = "sfpas";
    p["version"] = SFPAS_VERSION;
    p["command"] = ctx.command;
    p["seed"] = ctx.seed;
    p["tolerances"] = ctx.tolerances;
    p["inputs"] = ctx.inputs;
    ordered_json libs;
    libs["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION);
    libs["boost"] = std::string(BOOST_LIB_VERSION);
    libs["fftw"] = std::string(fftw_version);
    p["libraries"] = libs;
    return p;
}

json load_input(Context& ctx, const std::string& path) {
    ctx.inputs.push_back(std::filesystem::path(path).filename().string());
    return read_json_file(path);
}

std::string format_verdict(StabilityVerdict v) { return to_string(v); }

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const Log log(err);
    CLI::App app{"Stability, quotient and invariant computations for symplectic factorization problems", "sfpas"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(SFPAS_VERSION));

    Context ctx;
    std::function<Outcome()> job;

    auto common = [&](CLI::App* c) {
        c->add_option("--seed", ctx.seed, "Random seed")->default_val(0);
        c->add_option("--out", ctx.out_path, "Write the result here instead of stdout");
    };
    auto set_job = [&](CLI::App* c, std::string name, std::function<Outcome()> f) {
        c->callback([&ctx, &job, name, f] {
            ctx.command = name;
            job = f;
        });
    };

    // ---- quiver -----------------------------------------------------------
    auto* quiver_cmd = app.add_subcommand("quiver", "Moment maps and Kempf-Ness flow for quiver problems");
    quiver_cmd->require_subcommand(1);

    std::string q_file;
    double q_tol = 1e-8, q_step = 0.1, q_h = 1e-5;
    std::size_t q_max_iter = 100000, q_trials = 20, q_samples = 1;
    bool q_trace = false;
    auto flow_cfg = [&] {
        quiver::FlowConfig cfg;
        cfg.tol = q_tol;
        cfg.step = q_step;
        cfg.max_iter = q_max_iter;
        cfg.seed = ctx.seed;
        cfg.record_trace = q_trace;
        if (!(cfg.tol > 0) || !(cfg.step > 0)) throw InvalidInput("--tol and --step must be positive");
        ctx.tolerances = {{"tol", cfg.tol}, {"step", cfg.step}, {"max_iter", cfg.max_iter},
                          {"stabilizer_threshold", cfg.stabilizer_threshold}, {"rank_tol", cfg.rank_tol}};
        return cfg;
    };
    auto start_point = [&](const LoadedQuiver& lq) {
        if (lq.point) return *lq.point;
        std::mt19937_64 rng(ctx.seed);
        return quiver::random_point(lq.problem, rng);
    };
    auto flow_options = [&](CLI::App* c) {
        c->add_option("file", q_file, "Problem JSON")->required();
        c->add_option("--tol", q_tol, "Energy tolerance")->default_val(1e-8);
        c->add_option("--step", q_step, "Initial step")->default_val(0.1);
        c->add_option("--max-iter", q_max_iter, "Iteration cap")->default_val(100000);
        common(c);
    };

    auto* q_flow = quiver_cmd->add_subcommand("flow", "Run the gradient flow of |mu|^2 along the complexified orbit");
    flow_options(q_flow);
    q_flow->add_flag("--trace", q_trace, "Record the accepted energies");
    set_job(q_flow, "quiver flow", [&] {
        const auto lq = load_quiver(load_input(ctx, q_file));
        const auto cfg = flow_cfg();
        const auto res = quiver::kempf_ness_flow(lq.problem, start_point(lq), lq.level, cfg);
        log(LogLevel::Info, "flow finished after " + std::to_string(res.iterations) + " iterations");
        Outcome o;
        o.result["verdict"] = format_verdict(res.verdict);
        o.result["final_energy"] = res.final_energy;
        o.result["iterations"] = res.iterations;
        o.result["sigma_min"] = res.sigma_min;
        o.result["termination"] = res.termination;
        o.result["final_point"] = encode_point(lq.problem, res.final_point);
        if (q_trace) o.result["energy_trace"] = res.energy_trace;
        if (res.termination == "max_iter" || res.termination == "divergence") o.exit_code = 3;
        return o;
    });

    auto* q_verdict = quiver_cmd->add_subcommand("verdict", "Numerical stability verdict of the given point");
    flow_options(q_verdict);
    set_job(q_verdict, "quiver verdict", [&] {
        const auto lq = load_quiver(load_input(ctx, q_file));
        const auto cfg = flow_cfg();
        const auto res = quiver::kempf_ness_flow(lq.problem, start_point(lq), lq.level, cfg);
        Outcome o;
        o.result["verdict"] = format_verdict(res.verdict);
        o.result["final_energy"] = res.final_energy;
        o.result["sigma_min"] = res.sigma_min;
        return o;
    });

    auto* q_ham = quiver_cmd->add_subcommand("hamiltonian-check", "Finite-difference check of the moment-map identity");
    q_ham->set_help_flag("--help", "Print this help message and exit");
    q_ham->add_option("file", q_file, "Problem JSON")->required();
    q_ham->add_option("--h", q_h, "Difference step, at most 1e-3")->default_val(1e-5);
    q_ham->add_option("--samples", q_samples, "Number of random (xi, w) pairs")->default_val(1)->check(CLI::PositiveNumber);
    common(q_ham);
    set_job(q_ham, "quiver hamiltonian-check", [&] {
        const auto lq = load_quiver(load_input(ctx, q_file));
        ctx.tolerances = {{"h", q_h}};
        std::mt19937_64 rng(ctx.seed);
        ordered_json errors = ordered_json::array();
        double worst = 0.0;
        for (std::size_t s = 0; s < q_samples; ++s) {
            const auto p = lq.point ? *lq.point : quiver::random_point(lq.problem, rng);
            const auto xi = quiver::random_lie_element(lq.problem, rng);
            const auto w = quiver::random_point(lq.problem, rng);
            const double e = quiver::hamiltonian_check(lq.problem, p, lq.level, xi, w, q_h);
            errors.push_back(e);
            worst = std::max(worst, e);
        }
        Outcome o;
        o.result["max_relative_error"] = worst;
        o.result["errors"] = errors;
        return o;
    });

    auto* q_proper = quiver_cmd->add_subcommand("properness", "Search for nonzero solutions of mu = 0 at level 0");
    q_proper->add_option("file", q_file, "Problem JSON")->required();
    q_proper->add_option("--trials", q_trials, "Random starting points")->default_val(20);
    q_proper->add_option("--tol", q_tol, "Energy tolerance")->default_val(1e-8);
    q_proper->add_option("--max-iter", q_max_iter, "Iteration cap per flow")->default_val(100000);
    common(q_proper);
    set_job(q_proper, "quiver properness", [&] {
        const auto lq = load_quiver(load_input(ctx, q_file));
        auto cfg = flow_cfg();
        ctx.tolerances["trials"] = q_trials;
        const auto w = quiver::properness_refuter(lq.problem, cfg, q_trials);
        Outcome o;
        o.result["witness_found"] = w.has_value();
        o.result["witness"] = w ? encode_point(lq.problem, *w) : ordered_json(nullptr);
        o.result["proves_properness"] = false;
        return o;
    });

    // ---- flag ---------------------------------------------------------------
    auto* flag_cmd = app.add_subcommand("flag", "Exact stability of flag chains");
    flag_cmd->require_subcommand(1);
    std::string f_file;
    auto* f_check = flag_cmd->add_subcommand("check", "Exact stability verdict with a destabilizing witness");
    f_check->add_option("file", f_file, "Flag chain JSON")->required();
    common(f_check);
    set_job(f_check, "flag check", [&] {
        const auto chain = load_flag(load_input(ctx, f_file));
        const auto v = family::flag_stable(chain);
        Outcome o;
        o.result["verdict"] = format_verdict(v.verdict);
        if (v.witness) {
            ordered_json w;
            w["map_index"] = v.witness->map_index + 1;
            w["pairing"] = to_string(v.witness->pairing);
            w["xi"] = encode_tuple(v.witness->xi);
            w["filtration_holds"] = family::witness_filtration_holds(chain, v.witness->xi);
            o.result["witness"] = w;
        } else {
            o.result["witness"] = nullptr;
        }
        return o;
    });

    // ---- stromme ------------------------------------------------------------
    auto* st_cmd = app.add_subcommand("stromme", "Stromme triples on the projective line");
    st_cmd->require_subcommand(1);
    std::string st_file, st_s = "1", st_t = "1";
    std::size_t st_trials = 200;
    bool st_refute = false;
    auto refutation = [&](const family::StrommeTriple& t) {
        const auto s = parse_eps(st_s), tt = parse_eps(st_t);
        ctx.tolerances = {{"s", family::to_string(s)}, {"t", family::to_string(tt)}, {"trials", st_trials}};
        const auto viol = family::stromme_refuter(t, s, tt, ctx.seed, st_trials);
        ordered_json r;
        r["violation_found"] = viol.has_value();
        if (viol) {
            r["clause"] = viol->clause;
            r["u1"] = oj(json_io::encode(viol->u1));
            r["v1"] = oj(json_io::encode(viol->v1));
        }
        return r;
    };
    auto st_options = [&](CLI::App* c, bool with_refute) {
        c->add_option("file", st_file, "Triple JSON")->required();
        c->add_option("--s", st_s, "Level s (p/q, optionally +eps)")->default_val("1");
        c->add_option("--t", st_t, "Level t (p/q, optionally +eps)")->default_val("1");
        c->add_option("--trials", st_trials, "Random subspaces tried by the refuter")->default_val(200);
        if (with_refute) c->add_flag("--refute", st_refute, "Also search for violations of the slope inequalities");
        common(c);
    };

    auto* st_check = st_cmd->add_subcommand("check", "Decide the two triple conditions");
    st_options(st_check, true);
    set_job(st_check, "stromme check", [&] {
        const auto t = load_triple(load_input(ctx, st_file));
        const auto c = family::stromme_check(t);
        Outcome o;
        o.result["cond1"] = c.cond1;
        o.result["cond2"] = c.cond2;
        o.result["is_triple"] = c.is_triple;
        if (c.is_triple) {
            const auto inv = family::quot_invariants(t);
            o.result["invariants"] = {{"rank", inv.rank}, {"degree", inv.degree}};
        } else {
            o.result["invariants"] = nullptr;
        }
        if (st_refute) o.result["refutation"] = refutation(t);
        return o;
    });

    auto* st_ref = st_cmd->add_subcommand("refute", "Search for subspaces violating the slope inequalities");
    st_options(st_ref, false);
    set_job(st_ref, "stromme refute", [&] {
        const auto t = load_triple(load_input(ctx, st_file));
        Outcome o;
        o.result = refutation(t);
        o.result["proves_stability"] = false;
        return o;
    });

    auto* st_quot = st_cmd->add_subcommand("quot", "Rank and degree of the quotient sheaf");
    st_quot->add_option("file", st_file, "Triple JSON")->required();
    common(st_quot);
    set_job(st_quot, "stromme quot", [&] {
        const auto t = load_triple(load_input(ctx, st_file));
        const auto inv = family::quot_invariants(t);
        Outcome o;
        o.result["rank"] = inv.rank;
        o.result["degree"] = inv.degree;
        return o;
    });

    // ---- toric --------------------------------------------------------------
    auto* tor_cmd = app.add_subcommand("toric", "Toric quotients: fans, levels and stability");
    tor_cmd->require_subcommand(1);
    std::string tor_file, tor_level, tor_support;
    auto level_of = [&](const LoadedToric& t) {
        std::vector<Rational> a;
        if (!tor_level.empty()) a = parse_rational_list(tor_level);
        else if (t.level) a = *t.level;
        else throw InvalidInput("a level representative is required (--level-rep or level_rep in the file)");
        t.v.check_level(a);
        return a;
    };
    auto need_fan = [](const LoadedToric& t) -> const toric::Fan& {
        if (!t.fan) throw InvalidInput("this command needs max_cones in the input file");
        return *t.fan;
    };
    auto tor_options = [&](CLI::App* c, bool level) {
        c->add_option("file", tor_file, "Toric data JSON")->required();
        if (level) c->add_option("--level-rep", tor_level, "Level representative a, comma separated");
        common(c);
    };

    auto* tor_validate = tor_cmd->add_subcommand("validate", "Check conditions on v and the fan");
    tor_options(tor_validate, false);
    set_job(tor_validate, "toric validate", [&] {
        const auto t = load_toric(load_input(ctx, tor_file));
        const auto p1 = toric::check_P1(t.v);
        const auto p2 = toric::check_P2(t.v);
        Outcome o;
        o.result["P1"] = {{"ok", p1.ok}, {"diagnostic", p1.diagnostic}};
        if (p1.offending_column) o.result["P1"]["column"] = *p1.offending_column + 1;
        o.result["P2"] = {{"ok", p2.ok}};
        if (!p2.ok) o.result["P2"]["certificate"] = encode_rationals(p2.certificate);
        if (t.fan) {
            const auto f = toric::validate_fan(*t.fan, t.v);
            o.result["fan"] = {{"simplicial", f.simplicial}, {"is_fan", f.is_fan}, {"complete", f.complete}, {"diagnostic", f.diagnostic}};
        } else {
            o.result["fan"] = nullptr;
        }
        return o;
    });

    auto* tor_member = tor_cmd->add_subcommand("membership", "Membership of the level in K(Sigma) and its interior K0(Sigma)");
    tor_options(tor_member, true);
    set_job(tor_member, "toric membership", [&] {
        const auto t = load_toric(load_input(ctx, tor_file));
        const auto a = level_of(t);
        const auto k = toric::k_membership(need_fan(t), t.v, a);
        Outcome o;
        o.result["level_rep"] = encode_rationals(a);
        o.result["coker_coordinates"] = encode_rationals(t.v.coker_coordinates(a));
        o.result["in_K"] = k.in_K;
        o.result["in_K0"] = k.in_K0;
        return o;
    });

    auto* tor_stab = tor_cmd->add_subcommand("stability", "Semistability of points with a given support (all supports if omitted)");
    tor_options(tor_stab, true);
    tor_stab->add_option("--support", tor_support, "Nonzero coordinates, 1-based, comma separated");
    set_job(tor_stab, "toric stability", [&] {
        const auto t = load_toric(load_input(ctx, tor_file));
        const auto a = level_of(t);
        std::vector<std::vector<bool>> supports;
        if (tor_stab->count("--support")) {
            std::vector<bool> s(t.v.r(), false);
            for (const auto& tok : split(tor_support, ',')) {
                if (trim(tok).empty()) continue;
                const double x = parse_double(trim(tok));
                if (x != std::floor(x) || x < 1 || x > static_cast<double>(t.v.r()))
                    throw InvalidInput("support index '" + tok + "' outside 1.." + std::to_string(t.v.r()));
                s[static_cast<std::size_t>(x) - 1] = true;
            }
            supports.push_back(s);
        } else {
            if (t.v.r() > 16) throw LimitExceeded("enumerating all supports needs r <= 16");
            for (unsigned mask = 0; mask < (1u << t.v.r()); ++mask) {
                std::vector<bool> s(t.v.r());
                for (std::size_t j = 0; j < t.v.r(); ++j) s[j] = mask >> j & 1u;
                supports.push_back(s);
            }
        }
        Outcome o;
        o.result["level_rep"] = encode_rationals(a);
        if (t.fan) {
            const auto k = toric::k_membership(*t.fan, t.v, a);
            o.result["in_K0"] = k.in_K0;
        }
        ordered_json rows = ordered_json::array();
        for (const auto& s : supports) {
            const auto res = toric::semistable_lp(s, t.v, a);
            ordered_json row;
            row["support"] = support_label(s);
            row["semistable"] = res.semistable;
            row["stable"] = res.stable;
            if (t.fan) row["in_U"] = toric::u_membership(s, *t.fan);
            row["certificate"] = res.semistable ? encode_rationals(res.certificate) : ordered_json(nullptr);
            rows.push_back(row);
        }
        o.result["points"] = rows;
        return o;
    });

    auto* tor_chamber = tor_cmd->add_subcommand("chamber", "Find a fan whose interior parameter set contains the level");
    tor_options(tor_chamber, true);
    set_job(tor_chamber, "toric chamber", [&] {
        const auto t = load_toric(load_input(ctx, tor_file));
        const auto a = level_of(t);
        const auto fan = toric::chamber_fan_search(t.v, a);
        Outcome o;
        o.result["level_rep"] = encode_rationals(a);
        o.result["found"] = fan.has_value();
        o.result["max_cones"] = fan ? encode_cones(*fan) : ordered_json(nullptr);
        return o;
    });

    auto* tor_nonempty = tor_cmd->add_subcommand("nonempty", "Whether the quotient at the level is nonempty");
    tor_options(tor_nonempty, true);
    set_job(tor_nonempty, "toric nonempty", [&] {
        const auto t = load_toric(load_input(ctx, tor_file));
        const auto a = level_of(t);
        const auto b = toric::nonnegative_representative(t.v, a, std::vector<bool>(t.v.r(), true));
        Outcome o;
        o.result["level_rep"] = encode_rationals(a);
        o.result["nonempty"] = b.has_value();
        o.result["nonnegative_representative"] = b ? encode_rationals(*b) : ordered_json(nullptr);
        return o;
    });

    // ---- invariants ---------------------------------------------------------
    auto* inv_cmd = app.add_subcommand("invariants", "Exterior-algebra invariants of the abelian problem");
    inv_cmd->require_subcommand(1);
    int i_g = 0;
    long i_r = 1, i_r0 = 1, i_d = 0, i_d0 = 0;
    std::string i_side = "above", i_l = "one", i_kind;
    int i_index = 0;

    auto* inv_ggw = inv_cmd->add_subcommand("ggw", "Evaluate the abelian invariant");
    inv_ggw->add_option("--g", i_g, "Genus")->required()->check(CLI::NonNegativeNumber);
    inv_ggw->add_option("--r0", i_r0, "Rank of E0")->required();
    inv_ggw->add_option("--d", i_d, "Degree of E")->required();
    inv_ggw->add_option("--d0", i_d0, "Degree of E0")->required();
    inv_ggw->add_option("--side", i_side, "Parameter side of the threshold")->default_val("above")->check(CLI::IsMember({"above", "below"}));
    inv_ggw->add_option("--l", i_l, "top, one, or a JSON class {\"terms\":[{\"monomial\":\"a1^b1\",\"coeff\":1}]}")->default_val("one");
    common(inv_ggw);
    set_job(inv_ggw, "invariants ggw", [&] {
        invariants::AbelianProblem p{i_g, i_r0, i_d, i_d0, i_side == "above" ? invariants::ThresholdSide::Above : invariants::ThresholdSide::Below};
        invariants::ExteriorClass l(i_g);
        if (i_l == "one") {
            l = invariants::ExteriorClass::one(i_g);
        } else if (i_l == "top") {
            l = invariants::ExteriorClass::top(i_g);
        } else {
            json lj;
            try {
                lj = json::parse(i_l);
            } catch (const json::parse_error& e) {
                throw InvalidInput(std::string("--l must be top, one or a JSON class: ") + e.what());
            }
            for (const auto& term : field(lj, "terms")) {
                const json& c = field(term, "coeff");
                const BigInt coeff = c.is_string() ? BigInt(c.get<std::string>()) : BigInt(c.get<long long>());
                l += invariants::parse_monomial(i_g, field(term, "monomial").get<std::string>(), coeff);
            }
        }
        const auto e = invariants::ggw_expansion(p, l);
        Outcome o;
        o.result["value"] = json_int(e.value);
        o.result["expected_dimension"] = json_int(e.v);
        o.result["side"] = invariants::to_string(p.side);
        o.result["i_min"] = e.i_min;
        ordered_json terms = ordered_json::array();
        for (const auto& t : e.terms) terms.push_back({{"i", t.i}, {"contribution", json_int(t.contribution)}});
        o.result["terms"] = terms;
        o.result["experimental"] = e.experimental;
        return o;
    });

    auto* inv_quot = inv_cmd->add_subcommand("quot-count", "Number of points of the zero-dimensional quotient");
    inv_quot->add_option("--g", i_g, "Genus")->required()->check(CLI::NonNegativeNumber);
    inv_quot->add_option("--r0", i_r0, "Rank of E0")->required();
    common(inv_quot);
    set_job(inv_quot, "invariants quot-count", [&] {
        const auto n = invariants::quot_count(i_g, i_r0);
        Outcome o;
        o.result["value"] = json_int(n);
        o.result["terms"] = ordered_json::array({{{"i", i_g}, {"contribution", json_int(n)}}});
        return o;
    });

    auto* inv_dim = inv_cmd->add_subcommand("expected-dim", "Expected dimension of the moduli space");
    inv_dim->add_option("--r", i_r, "Rank of E")->default_val(1);
    inv_dim->add_option("--r0", i_r0, "Rank of E0")->required();
    inv_dim->add_option("--d", i_d, "Degree of E")->required();
    inv_dim->add_option("--d0", i_d0, "Degree of E0")->required();
    inv_dim->add_option("--g", i_g, "Genus")->required()->check(CLI::NonNegativeNumber);
    common(inv_dim);
    set_job(inv_dim, "invariants expected-dim", [&] {
        const auto v = invariants::expected_dimension(i_r, i_r0, i_d, i_d0, i_g);
        Outcome o;
        o.result["value"] = json_int(v);
        o.result["general_formula"] = json_int(invariants::expected_dimension_general(i_r, i_r0, i_d, i_d0, i_g));
        if (i_r == 1) o.result["abelian_formula"] = json_int(invariants::expected_dimension_abelian(i_r0, i_d, i_d0, i_g));
        return o;
    });

    auto* inv_deg = inv_cmd->add_subcommand("degrees", "Degrees of the tautological generators");
    inv_deg->add_option("--r", i_r, "Rank")->required();
    inv_deg->add_option("--kind", i_kind, "u, v or h1 (all generators if omitted)");
    inv_deg->add_option("--index", i_index, "Generator index");
    common(inv_deg);
    set_job(inv_deg, "invariants degrees", [&] {
        Outcome o;
        const int r = static_cast<int>(i_r);
        if (!i_kind.empty()) {
            o.result["kind"] = i_kind;
            o.result["index"] = i_index;
            o.result["degree"] = invariants::algebra_degree(r, invariants::parse_class_kind(i_kind), i_index);
            return o;
        }
        if (r < 1 || r > 1000) throw InvalidInput("--r must lie in 1..1000");
        ordered_json table = ordered_json::array();
        const std::pair<const char*, invariants::ClassKind> kinds[] = {
            {"u", invariants::ClassKind::U}, {"v", invariants::ClassKind::V}, {"h1", invariants::ClassKind::H1}};
        for (const auto& [name, kind] : kinds)
            for (int i = (kind == invariants::ClassKind::V ? 2 : 1); i <= r; ++i)
                table.push_back({{"kind", name}, {"index", i}, {"degree", invariants::algebra_degree(r, kind, i)}});
        o.result["generators"] = table;
        return o;
    });

    // ---- vortex -------------------------------------------------------------
    auto* vx_cmd = app.add_subcommand("vortex", "Abelian vortex equation on a flat torus");
    vx_cmd->require_subcommand(1);
    std::size_t vx_n = 64, vx_max_newton = 100, vx_steps = 10;
    double vx_l = 2.0 * std::numbers::pi, vx_t = 0.0, vx_sigma = 0.0, vx_tol = 1e-8, vx_damping = 0.8;
    double vx_from = 0.0, vx_to = 1.0;
    int vx_d = -1;
    std::string vx_centers;
    auto vx_problem = [&] {
        vortex::VortexProblem p;
        p.grid = {vx_n, vx_l};
        p.d = vx_d;
        p.t = vx_t;
        p.sigma = vx_sigma;
        if (!vx_centers.empty()) {
            for (const auto& item : split(vx_centers, ';')) {
                const auto parts = split(item, ',');
                if (parts.size() != 2 && parts.size() != 3) throw InvalidInput("centers are x,y[,multiplicity] separated by ';'");
                vortex::Center c{parse_double(trim(parts[0])), parse_double(trim(parts[1])), 1};
                if (parts.size() == 3) {
                    const double m = parse_double(trim(parts[2]));
                    if (m != std::floor(m) || m < 1 || m > 1e6) throw InvalidInput("multiplicity must be a positive integer");
                    c.multiplicity = static_cast<int>(m);
                }
                p.centers.push_back(c);
            }
        } else if (vx_d < 0) {
            const int n = -vx_d;
            for (int k = 0; k < n; ++k) {
                const double s = (k + 0.5) / n;
                p.centers.push_back({s, s, 1});
            }
        }
        return p;
    };
    auto vx_cfg = [&] {
        vortex::VortexConfig cfg;
        cfg.tol = vx_tol;
        cfg.max_newton = vx_max_newton;
        cfg.damping = vx_damping;
        ctx.tolerances = {{"tol", cfg.tol}, {"max_newton", cfg.max_newton}, {"damping", cfg.damping}, {"cg_tol", cfg.cg_tol}};
        return cfg;
    };
    auto vx_options = [&](CLI::App* c) {
        c->add_option("--N", vx_n, "Grid points per side")->default_val(64);
        c->add_option("--L", vx_l, "Side length")->default_str("2*pi");
        c->add_option("--d", vx_d, "Degree (<= 0)")->default_val(-1);
        c->add_option("--centers", vx_centers, "Zeros as x,y[,mult] in fractional coordinates, ';' separated");
        c->add_option("--sigma", vx_sigma, "Well width (default L/16)")->default_val(0.0);
        c->add_option("--tol", vx_tol, "Residual tolerance")->default_val(1e-8);
        c->add_option("--max-newton", vx_max_newton, "Newton iteration cap")->default_val(100);
        c->add_option("--damping", vx_damping, "Newton damping factor")->default_val(0.8);
        common(c);
    };

    auto* vx_solve = vx_cmd->add_subcommand("solve", "Solve at one parameter value");
    vx_options(vx_solve);
    vx_solve->add_option("--t", vx_t, "Parameter t")->required();
    set_job(vx_solve, "vortex solve", [&] {
        const auto p = vx_problem();
        const auto cfg = vx_cfg();
        const auto f = vortex::solve_vortex(p, cfg);
        Outcome o;
        o.result["N"] = f.N;
        o.result["L"] = p.grid.L;
        o.result["t"] = p.t;
        o.result["threshold"] = vortex::bradlow_threshold(p.d, p.grid.volume());
        o.result["tau0"] = f.tau0;
        o.result["converged"] = f.converged;
        o.result["residual"] = f.residual_sup;
        o.result["iterations"] = f.iterations;
        if (f.converged) o.result["quantization_error"] = vortex::quantization_check(f, p);
        ordered_json u = ordered_json::array();
        for (std::size_t i = 0; i < f.N; ++i)
            u.push_back(std::vector<double>(f.u.begin() + static_cast<long>(i * f.N), f.u.begin() + static_cast<long>((i + 1) * f.N)));
        o.result["u"] = u;
        if (!f.converged) o.exit_code = 3;
        return o;
    });

    auto* vx_scan = vx_cmd->add_subcommand("scan", "Solve over a range of t and emit CSV");
    vx_options(vx_scan);
    vx_scan->add_option("--t-from", vx_from, "First t")->required();
    vx_scan->add_option("--t-to", vx_to, "Last t")->required();
    vx_scan->add_option("--steps", vx_steps, "Number of t values")->default_val(10)->check(CLI::PositiveNumber);
    set_job(vx_scan, "vortex scan", [&] {
        const auto p = vx_problem();
        const auto cfg = vx_cfg();
        const auto rows = vortex::threshold_scan(p, vx_from, vx_to, vx_steps, cfg);
        std::ostringstream csv;
        csv << "t,converged,residual,iterations\n";
        csv << std::setprecision(17);
        for (const auto& r : rows)
            csv << r.t << ',' << (r.converged ? "true" : "false") << ',' << (r.infeasible ? std::string("infeasible") : [&] {
                std::ostringstream x;
                x << std::setprecision(17) << r.residual;
                return x.str();
            }()) << ',' << r.iterations << '\n';
        Outcome o;
        o.raw = csv.str();
        return o;
    });

    // ---- parse and dispatch ---------------------------------------------------
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << SFPAS_VERSION << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "sfpas: " << e.what() << '\n';
        return 2;
    }

    int code = 0;
    try {
        if (!job) throw InvalidInput("no command given");
        log(LogLevel::Debug, "running " + ctx.command);
        Outcome o = job();
        std::string payload;
        if (o.raw) {
            payload = "# " + provenance(ctx).dump() + "\n" + *o.raw;
        } else {
            ordered_json doc;
            doc["provenance"] = provenance(ctx);
            doc["result"] = o.result;
            payload = doc.dump(2) + "\n";
        }
        if (!ctx.out_path.empty()) {
            std::ofstream f(ctx.out_path, std::ios::binary);
            if (!f) throw InvalidInput("cannot write output file '" + ctx.out_path + "'");
            f << payload;
        } else {
            out << payload;
        }
        code = o.exit_code;
        if (code == 3) err << "sfpas: " << ctx.command << " did not converge\n";
    } catch (const InvalidInput& e) {
        err << "sfpas: invalid input: " << e.what() << '\n';
        code = 2;
    } catch (const json::exception& e) {
        err << "sfpas: invalid input: " << e.what() << '\n';
        code = 2;
    } catch (const LimitExceeded& e) {
        err << "sfpas: " << e.what() << '\n';
        code = 3;
    } catch (const std::exception& e) {
        err << "sfpas: internal error: " << e.what() << '\n';
        code = 4;
    }
    return code;
}

}  // namespace sfpas::cli
