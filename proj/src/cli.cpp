#include "unilearn/cli.hpp"

#include "unilearn/bounds.hpp"
#include "unilearn/errors.hpp"
#include "unilearn/experiments.hpp"
#include "unilearn/hat.hpp"
#include "unilearn/network_io.hpp"
#include "unilearn/parallel.hpp"
#include "unilearn/recovery.hpp"
#include "unilearn/rng.hpp"
#include "unilearn/witness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace unilearn {

namespace {

using nlohmann::json;

struct Globals {
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string out;
    std::string format = "json";

    std::uint64_t resolved_seed(std::uint64_t fallback = 0) const {
        if (seed)
            return *seed;
        if (const char* env = std::getenv("UNILEARN_SEED")) {
            try {
                std::size_t used = 0;
                const std::uint64_t v = std::stoull(env, &used);
                if (used == std::string(env).size())
                    return v;
            } catch (const std::exception&) {
            }
            throw PreconditionError("UNILEARN_SEED must be a nonnegative integer");
        }
        return fallback;
    }
    bool seed_given() const { return seed.has_value() || std::getenv("UNILEARN_SEED") != nullptr; }
};

std::string scalar_text(const json& v) {
    if (v.is_string())
        return v.get<std::string>();
    return v.dump();
}

// Flattens nested objects into dotted keys.
void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items())
            flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else {
        out.emplace_back(prefix, scalar_text(j));
    }
}

std::string render(const json& j, const std::string& format) {
    if (format == "json")
        return j.dump(2) + "\n";
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(j, "", rows);
    std::ostringstream os;
    if (format == "table") {
        std::size_t width = 0;
        for (const auto& r : rows)
            width = std::max(width, r.first.size());
        for (const auto& [k, v] : rows)
            os << k << std::string(width - k.size() + 2, ' ') << v << "\n";
    } else {
        for (std::size_t i = 0; i < rows.size(); ++i)
            os << (i ? "," : "") << rows[i].first;
        os << "\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::string v = rows[i].second;
            if (v.find(',') != std::string::npos)
                v = "\"" + v + "\"";
            os << (i ? "," : "") << v;
        }
        os << "\n";
    }
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    f << text;
}

void emit(const json& j, const Globals& g, std::ostream& out) {
    const std::string text = render(j, g.format);
    if (!g.out.empty())
        write_text(g.out, text);
    out << text;
}

std::vector<std::size_t> class_arch(std::size_t d, std::size_t L, std::size_t B) {
    std::vector<std::size_t> arch{d};
    for (std::size_t i = 0; i + 1 < L; ++i)
        arch.push_back(B);
    arch.push_back(1);
    return arch;
}

Point parse_point(const std::vector<double>& values, std::size_t d) {
    if (values.size() == 1)
        return Point(d, values.front());
    if (values.size() != d)
        throw PreconditionError("--y needs 1 or d values");
    return values;
}

json hat_to_json(const HatSpec& h) {
    return {{"d", h.d}, {"s", h.s}, {"M", h.M}, {"y", h.y}, {"nu", h.nu}, {"amplitude", h.amplitude}};
}

HatSpec hat_from_json(const json& j) {
    HatSpec h;
    h.d = j.at("d").get<std::size_t>();
    h.s = j.at("s").get<std::size_t>();
    h.M = j.at("M").get<double>();
    h.y = j.at("y").get<Point>();
    h.nu = j.at("nu").get<int>();
    h.amplitude = j.at("amplitude").get<double>();
    h.validate();
    return h;
}

// ---------------------------------------------------------------- bounds

struct BoundsArgs {
    std::size_t d = 1, L = 3, B = 0, s = 0;
    double c = 1.0, m = 1.0, epsilon = 1.0, c0 = 1.0;
    std::string q = "inf", p = "inf";
};

int run_bounds(const BoundsArgs& a, const Globals& g, std::ostream& out) {
    BoundQuery query;
    query.d = a.d;
    query.L = a.L;
    query.B = a.B ? a.B : 3 * a.d;
    query.s = a.s ? a.s : std::min(a.d, query.B / 3);
    query.c = a.c;
    query.q = Exponent::parse(a.q);
    query.m = a.m;
    query.p = Exponent::parse(a.p);
    query.epsilon = a.epsilon;
    query.c0 = a.c0;
    emit(to_json(query, compute_bounds(query)), g, out);
    return 0;
}

// ---------------------------------------------------------------- construct

struct ConstructArgs {
    std::size_t d = 1, L = 3, B = 0, s = 1;
    double c = 1.0, M = 1.0;
    std::string q = "inf";
    std::vector<double> y{0.5};
    int nu = 1;
    std::size_t points = 100000;
};

constexpr double kExactnessTolerance = 1e-10;

int run_construct(const ConstructArgs& a, const Globals& g, std::ostream& out) {
    const NetworkClass cls(class_arch(a.d, a.L, a.B ? a.B : 3 * a.s), a.c, Exponent::parse(a.q));
    HatSpec spec;
    spec.d = a.d;
    spec.s = a.s;
    spec.M = a.M;
    spec.y = parse_point(a.y, a.d);
    spec.nu = a.nu;
    spec.amplitude = 1.0;
    const Construction con = construct_hat_network(cls, spec);
    const double deviation = verify_construction(con.net, con.hat, con.amplitude, a.points, g.resolved_seed());
    const double norm = coefficient_norm(con.net, cls.q);

    json meta = {{"branch", to_string(con.branch)},
                 {"class", {{"arch", cls.arch}, {"c", cls.c}, {"q", exponent_to_json(cls.q)}}},
                 {"hat", hat_to_json(con.hat)},
                 {"numerator", con.numerator},
                 {"amplitude", con.amplitude}};
    json report = {{"construction", meta},
                   {"coefficient_norm", norm},
                   {"in_class", in_class(con.net, cls, 0.0)},
                   {"max_deviation", deviation},
                   {"tolerance", kExactnessTolerance * con.amplitude},
                   {"verified", deviation <= kExactnessTolerance * con.amplitude}};
    if (!g.out.empty()) {
        json file = mlp_to_json(con.net);
        file["construction"] = meta;
        write_json_file(file, g.out);
    }
    out << render(report, g.format);
    return report["verified"].get<bool>() && report["in_class"].get<bool>() ? 0 : 1;
}

// ---------------------------------------------------------------- verify

struct Check {
    std::string name;
    bool pass;
    json detail;
};

std::vector<Check> smoke_checks(std::uint64_t seed) {
    std::vector<Check> checks;

    // Construction exactness on a few classes from both branches.
    {
        bool pass = true;
        double worst = 0.0;
        for (const char* q : {"1", "1.5", "2", "3", "inf"}) {
            const NetworkClass cls(class_arch(2, 4, 6), 1.5, Exponent::parse(q));
            HatSpec spec{2, 2, 4.0, {0.3, 0.7}, -1, 1.0};
            const Construction con = construct_hat_network(cls, spec);
            const double dev = verify_construction(con.net, con.hat, con.amplitude, 2000, seed);
            worst = std::max(worst, dev / con.amplitude);
            pass = pass && dev <= kExactnessTolerance * con.amplitude && in_class(con.net, cls, 0.0);
        }
        checks.push_back({"construction_exactness", pass, {{"max_relative_deviation", worst}}});
    }

    // Lp sandwich for the hat.
    {
        bool pass = true;
        for (const char* p : {"1", "2", "inf"}) {
            HatSpec spec{1, 1, 8.0, {0.5}, 1, 1.0};
            const Exponent e = Exponent::parse(p);
            const double v = hat_lp_norm_numeric(spec, e, 4096);
            const auto [lo, hi] = hat_lp_bounds(1, 8.0, e);
            pass = pass && lo <= v && v <= hi;
        }
        checks.push_back({"hat_lp_sandwich", pass, json::object()});
    }

    // Upper/lower squeeze on one q <= 2 class: grid recovery meets its bound
    // and the fooling attack against it still reaches the floor.
    {
        const NetworkClass cls(class_arch(1, 3, 3), 1.0, Exponent::finite(1.0));
        const std::size_t m = 16;
        HatSpec spec{1, 1, 4.0, {0.5}, 1, 1.0};
        const Construction con = construct_hat_network(cls, spec);
        const Mlp net = con.net;
        const Function u = [&net](std::span<const double> x) { return forward_scalar(net, x); };
        const DeterministicMethod grid = grid_recovery_method(1, m, lipschitz_bound(cls));
        const QueryTranscript t = run_with_recording(grid, u);
        LpEstimateOptions est;
        est.samples = 20000;
        est.seed = seed;
        const double sup_error = lp_error_estimate(u, t.predictor, Exponent::infinity(), 1, est);
        const double upper = upper_bound_error(cls, static_cast<double>(m));

        AttackOptions opts;
        opts.estimate = est;
        opts.u0_label = "constructed hat";
        const FoolingResult fr = fooling_attack(grid, 1, 1.0, u, Exponent::infinity(), opts);
        checks.push_back({"squeeze",
                          sup_error <= upper && fr.measured_error >= fr.theoretical_floor && fr.blindness_verified,
                          {{"grid_sup_error", sup_error},
                           {"upper_bound", upper},
                           {"fooling_error", fr.measured_error},
                           {"fooling_floor", fr.theoretical_floor}}});
    }
    return checks;
}

int run_verify(const std::string& file, std::size_t points, const Globals& g, std::ostream& out) {
    if (!file.empty()) {
        const json j = read_json_file(file);
        if (!j.contains("construction"))
            throw PreconditionError("verify: " + file + " has no construction metadata");
        const Mlp net = mlp_from_json(j);
        const json& meta = j.at("construction");
        const HatSpec hat = hat_from_json(meta.at("hat"));
        const double amplitude = meta.at("amplitude").get<double>();
        const auto& cj = meta.at("class");
        const NetworkClass cls(cj.at("arch").get<std::vector<std::size_t>>(), cj.at("c").get<double>(),
                               exponent_from_json(cj.at("q")));
        const double deviation = verify_construction(net, hat, amplitude, points, g.resolved_seed());
        const bool member = in_class(net, cls, 0.0);
        const bool pass = deviation <= kExactnessTolerance * amplitude && member;
        emit({{"file", file},
              {"max_deviation", deviation},
              {"tolerance", kExactnessTolerance * amplitude},
              {"in_class", member},
              {"pass", pass}},
             g, out);
        return pass ? 0 : 1;
    }
    json report = json::object();
    bool all = true;
    for (const Check& c : smoke_checks(g.resolved_seed())) {
        report[c.name] = {{"pass", c.pass}, {"detail", c.detail}};
        all = all && c.pass;
    }
    report["pass"] = all;
    emit(report, g, out);
    return all ? 0 : 1;
}

// ---------------------------------------------------------------- attack

struct AttackArgs {
    std::string method = "zero";
    std::size_t d = 1, s = 1, m = 1, samples = 100000;
    std::string p = "inf";
    std::optional<double> amplitude;
    std::string u0 = "zero";
    // Class used for the default amplitude and the grid method's Lipschitz constant.
    std::size_t L = 3, B = 0;
    double c = 1.0;
    std::string q = "inf";
};

Mlp load_u0(const std::string& spec, std::size_t d, std::string& label) {
    if (spec == "zero") {
        label = "zero";
        return Mlp({d, 1});
    }
    if (spec.rfind("net:", 0) == 0) {
        label = spec;
        Mlp net = load_mlp(spec.substr(4));
        if (net.input_dim() != d || net.output_dim() != 1)
            throw PreconditionError("--u0 network must map R^d to R");
        return net;
    }
    throw PreconditionError("--u0 must be 'zero' or 'net:<file>'");
}

DeterministicMethod make_method(const std::string& name, std::size_t d, std::size_t m, double lipschitz) {
    if (name == "zero")
        return zero_method(d, m);
    if (name == "grid")
        return grid_recovery_method(d, m, lipschitz);
    if (name.rfind("student:", 0) == 0)
        return student_method(d, m, student_recipe_from_json(read_json_file(name.substr(8))));
    throw PreconditionError("--method must be zero, grid or student:<config>");
}

int run_attack(const AttackArgs& a, const Globals& g, std::ostream& out) {
    const NetworkClass cls(class_arch(a.d, a.L, a.B ? a.B : 3 * a.s), a.c, Exponent::parse(a.q));
    double amplitude = 0.0;
    if (a.amplitude) {
        amplitude = *a.amplitude;
    } else {
        // lambda / (2 M s) from the matching construction on the attack grid.
        const double M = 8.0 * static_cast<double>(fooling_grid_k(a.m, a.s));
        HatSpec probe{a.d, a.s, M, Point(a.d, 0.5), 1, 1.0};
        amplitude = construct_hat_network(cls, probe).numerator / (2.0 * M * static_cast<double>(a.s));
    }
    std::string label;
    const Mlp u0_net = load_u0(a.u0, a.d, label);
    const Function u0 = [&u0_net](std::span<const double> x) { return forward_scalar(u0_net, x); };
    const DeterministicMethod method = make_method(a.method, a.d, a.m, lipschitz_bound(cls));

    AttackOptions opts;
    opts.estimate.samples = a.samples;
    opts.estimate.seed = g.resolved_seed();
    opts.u0_label = label;
    const FoolingResult r = fooling_attack(method, a.s, amplitude, u0, Exponent::parse(a.p), opts);

    std::string text;
    if (g.format == "csv")
        text = fooling_csv_header() + "\n" + fooling_csv_row(r) + "\n";
    else
        text = render(to_json(r), g.format);
    if (!g.out.empty())
        write_text(g.out, text);
    out << text;
    return 0;
}

// ---------------------------------------------------------------- recover

struct RecoverArgs {
    std::string net;
    std::size_t m = 16, samples = 100000;
    std::optional<double> c;
    std::string q = "inf";
    std::vector<std::string> p_list{"1", "2", "inf"};
};

int run_recover(const RecoverArgs& a, const Globals& g, std::ostream& out) {
    const Mlp net = load_mlp(a.net);
    if (net.output_dim() != 1)
        throw PreconditionError("recover: the target network must be scalar-valued");
    const std::size_t d = net.input_dim();
    const Function u = [&net](std::span<const double> x) { return forward_scalar(net, x); };

    std::optional<NetworkClass> cls;
    if (a.c)
        cls.emplace(net.arch(), *a.c, Exponent::parse(a.q));
    const double lipschitz = cls ? lipschitz_bound(*cls) : 0.0;
    const DeterministicMethod method = grid_recovery_method(d, a.m, lipschitz);
    const QueryTranscript t = run_with_recording(method, u);

    json errors = json::object();
    for (const std::string& p : a.p_list) {
        LpEstimateOptions est;
        est.samples = a.samples;
        est.seed = g.resolved_seed();
        errors[Exponent::parse(p).to_string()] = lp_error_estimate(u, t.predictor, Exponent::parse(p), d, est);
    }
    json report = {{"d", d}, {"m", a.m}, {"K", grid_resolution(d, a.m)}, {"queries", t.points.size()},
                   {"errors", errors}};
    if (cls) {
        report["in_class"] = in_class(net, *cls, 0.0);
        report["upper_bound_error"] = upper_bound_error(*cls, static_cast<double>(a.m));
    }
    emit(report, g, out);
    return 0;
}

// ---------------------------------------------------------------- experiment

int run_experiment(const std::string& config_path, bool timing, const Globals& g, std::ostream& out) {
    ExperimentConfig config = experiment_config_from_json(read_json_file(config_path));
    if (g.seed_given())
        config.seed = g.resolved_seed();
    const ExperimentResult result = estimate_err_hat(config);
    const json table = err_hat_json(config, result);
    const std::string csv = trials_csv(config, result, timing);
    if (!g.out.empty()) {
        std::filesystem::create_directories(g.out);
        write_text(std::filesystem::path(g.out) / "trials.csv", csv);
        write_json_file(table, std::filesystem::path(g.out) / "err_hat.json");
    }
    out << (g.format == "csv" ? csv : render(table, g.format));
    return 0;
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sampling-complexity toolkit for ReLU network classes", "unilearn"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Base seed (falls back to UNILEARN_SEED, then 0)");
    app.add_option("--threads", g.threads, "Worker thread cap; never changes results")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", g.out, "Output file (directory for experiment)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv", "table"}));

    BoundsArgs ba;
    auto* bounds = app.add_subcommand("bounds", "Closed-form lower and upper error bounds");
    bounds->add_option("--d", ba.d)->check(CLI::PositiveNumber);
    bounds->add_option("--L", ba.L);
    bounds->add_option("--B", ba.B, "Hidden width (default 3d)");
    bounds->add_option("--c", ba.c);
    bounds->add_option("--q", ba.q);
    bounds->add_option("--m", ba.m);
    bounds->add_option("--p", ba.p);
    bounds->add_option("--s", ba.s, "Active coordinates (default min(d, B/3))");
    bounds->add_option("--epsilon", ba.epsilon);
    bounds->add_option("--c0", ba.c0);

    ConstructArgs ca;
    auto* construct = app.add_subcommand("construct", "Build a hat network inside a class");
    construct->add_option("--d", ca.d);
    construct->add_option("--L", ca.L);
    construct->add_option("--B", ca.B, "Hidden width (default 3s)");
    construct->add_option("--c", ca.c);
    construct->add_option("--q", ca.q);
    construct->add_option("--s", ca.s);
    construct->add_option("--M", ca.M);
    construct->add_option("--y", ca.y, "Center: one value (broadcast) or d values")->delimiter(',');
    construct->add_option("--nu", ca.nu)->check(CLI::IsMember({-1, 1}));
    construct->add_option("--points", ca.points, "Random verification points");

    std::string verify_file;
    std::size_t verify_points = 100000;
    auto* verify = app.add_subcommand("verify", "Check a constructed network, or run the smoke suite");
    verify->add_option("file", verify_file);
    verify->add_option("--points", verify_points);

    AttackArgs aa;
    auto* attack = app.add_subcommand("attack", "Fooling-set attack against a deterministic method");
    attack->add_option("--method", aa.method, "zero | grid | student:<config.json>");
    attack->add_option("--d", aa.d);
    attack->add_option("--s", aa.s);
    attack->add_option("--m", aa.m);
    attack->add_option("--p", aa.p);
    attack->add_option("--amplitude", aa.amplitude, "Default: lambda/(2Ms) from the class below");
    attack->add_option("--u0", aa.u0, "zero | net:<file>");
    attack->add_option("--samples", aa.samples, "Monte Carlo samples for the error estimate");
    attack->add_option("--L", aa.L);
    attack->add_option("--B", aa.B);
    attack->add_option("--c", aa.c);
    attack->add_option("--q", aa.q);

    RecoverArgs ra;
    auto* recover = app.add_subcommand("recover", "Grid recovery of a network given as JSON");
    recover->add_option("--net", ra.net)->required();
    recover->add_option("--m", ra.m);
    recover->add_option("--samples", ra.samples);
    recover->add_option("--c", ra.c, "Class radius for the guaranteed bound");
    recover->add_option("--q", ra.q);
    recover->add_option("--p", ra.p_list)->delimiter(',');

    std::string config_path;
    bool no_timing = false;
    auto* experiment = app.add_subcommand("experiment", "Teacher-student min-max error estimate");
    experiment->add_option("--config", config_path)->required();
    experiment->add_flag("--no-timing", no_timing, "Write wall_s = 0 so outputs are byte-reproducible");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    if (*seed_opt)
        g.seed = seed_value;

    try {
        set_max_threads(g.threads);
        if (*bounds)
            return run_bounds(ba, g, out);
        if (*construct)
            return run_construct(ca, g, out);
        if (*verify)
            return run_verify(verify_file, verify_points, g, out);
        if (*attack)
            return run_attack(aa, g, out);
        if (*recover)
            return run_recover(ra, g, out);
        if (*experiment)
            return run_experiment(config_path, !no_timing, g, out);
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "aborted: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace unilearn
