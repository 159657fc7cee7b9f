#include "unilearn/experiments.hpp"

#include "unilearn/errors.hpp"
#include "unilearn/network_io.hpp"
#include "unilearn/parallel.hpp"
#include "unilearn/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace unilearn {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kTeacherStream = 0x7465616368ULL;
constexpr std::uint64_t kTrainPointStream = 0x747261696eULL;
constexpr std::uint64_t kEvalStream = 0x6576616cULL;
constexpr std::uint64_t kTrialStream = 0x747269616cULL;
constexpr std::uint64_t kQueryStream = 0x7175657279ULL;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void check_arch(const std::vector<std::size_t>& arch, std::size_t d, const char* what) {
    if (arch.size() < 2 || arch.front() != d || arch.back() != 1)
        throw PreconditionError(std::string(what) + ": architecture must start at d and end at 1");
    for (std::size_t w : arch)
        if (w == 0)
            throw PreconditionError(std::string(what) + ": widths must be >= 1");
}

std::vector<double> errors_for(std::span<const double> abs_err, const std::vector<Exponent>& ps) {
    std::vector<double> out;
    std::vector<double> powered(abs_err.size());
    for (const Exponent& p : ps) {
        if (p.is_infinite()) {
            out.push_back(abs_err.empty() ? 0.0 : *std::max_element(abs_err.begin(), abs_err.end()));
            continue;
        }
        const double pv = p.value();
        for (std::size_t j = 0; j < abs_err.size(); ++j)
            powered[j] = std::pow(abs_err[j], pv);
        out.push_back(std::pow(pairwise_sum(powered) / static_cast<double>(abs_err.size()), 1.0 / pv));
    }
    return out;
}

} // namespace

void AdamParams::validate() const {
    if (!(lr_final > 0.0) || !(lr_init >= lr_final) || !std::isfinite(lr_init))
        throw PreconditionError("adam: need lr_init >= lr_final > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw PreconditionError("adam: betas must lie in [0, 1)");
    if (!(eps > 0.0))
        throw PreconditionError("adam: eps must be > 0");
}

void ExperimentConfig::validate() const {
    if (d < 1 || m_values.empty() || n_teachers < 1 || n_seeds < 1 || n_eval < 1 || student_archs.empty() ||
        batch_sizes.empty() || p_list.empty())
        throw PreconditionError("experiment config: all counts and lists must be nonempty");
    for (std::size_t m : m_values)
        if (m < 1)
            throw PreconditionError("experiment config: m must be >= 1");
    for (std::size_t b : batch_sizes)
        for (std::size_t m : m_values)
            if (b < 1 || b > m)
                throw PreconditionError("experiment config: need 1 <= batch_size <= m");
    for (const auto& a : student_archs)
        check_arch(a, d, "student");
    if (target == TargetKind::Teachers) {
        check_arch(teacher_class.arch, d, "teacher");
        if (!teacher_class.q.is_infinite())
            throw PreconditionError("experiment config: teacher sampling needs q = inf");
    } else if (d != 1) {
        throw PreconditionError("experiment config: the spiky_sine target is one-dimensional");
    }
    for (const Exponent& p : p_list)
        if (!p.at_least(1.0))
            throw PreconditionError("experiment config: p must be >= 1");
    adam.validate();
}

namespace {

AdamParams adam_from_json(const nlohmann::json& j) {
    AdamParams a;
    a.lr_init = j.value("lr_init", a.lr_init);
    a.lr_final = j.value("lr_final", a.lr_final);
    a.beta1 = j.value("beta1", a.beta1);
    a.beta2 = j.value("beta2", a.beta2);
    a.eps = j.value("eps", a.eps);
    return a;
}

nlohmann::json adam_to_json(const AdamParams& a) {
    return {{"lr_init", a.lr_init}, {"lr_final", a.lr_final}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

const std::vector<std::string> kConfigKeys{"d",       "m",      "target", "teacher_class", "n_teachers",
                                           "student_archs", "batch_sizes", "n_seeds", "n_eval", "p_list",
                                           "adam",    "epochs", "centered_domain", "seed"};

} // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object())
            throw PreconditionError("experiment config must be a JSON object");
        for (const auto& [key, _] : j.items())
            if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end())
                throw PreconditionError("experiment config: unknown key '" + key + "'");
        ExperimentConfig c;
        c.d = j.value("d", c.d);
        if (j.contains("m")) {
            const auto& m = j.at("m");
            c.m_values = m.is_array() ? m.get<std::vector<std::size_t>>() : std::vector<std::size_t>{m.get<std::size_t>()};
        }
        if (j.contains("target")) {
            const std::string t = j.at("target").get<std::string>();
            if (t == "teachers")
                c.target = TargetKind::Teachers;
            else if (t == "spiky_sine")
                c.target = TargetKind::SpikySine;
            else
                throw PreconditionError("experiment config: unknown target '" + t + "'");
        }
        if (j.contains("teacher_class")) {
            const auto& t = j.at("teacher_class");
            c.teacher_class = NetworkClass(t.at("arch").get<std::vector<std::size_t>>(), t.at("c").get<double>(),
                                           t.contains("q") ? exponent_from_json(t.at("q")) : Exponent::infinity());
        }
        c.n_teachers = j.value("n_teachers", c.n_teachers);
        if (j.contains("student_archs"))
            c.student_archs = j.at("student_archs").get<std::vector<std::vector<std::size_t>>>();
        if (j.contains("batch_sizes"))
            c.batch_sizes = j.at("batch_sizes").get<std::vector<std::size_t>>();
        c.n_seeds = j.value("n_seeds", c.n_seeds);
        c.n_eval = j.value("n_eval", c.n_eval);
        if (j.contains("p_list")) {
            c.p_list.clear();
            for (const auto& p : j.at("p_list"))
                c.p_list.push_back(exponent_from_json(p));
        }
        if (j.contains("adam"))
            c.adam = adam_from_json(j.at("adam"));
        c.epochs = j.value("epochs", c.epochs);
        c.centered_domain = j.value("centered_domain", c.centered_domain);
        c.seed = j.value("seed", c.seed);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError(std::string("experiment config: ") + e.what());
    }
}

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json ps = nlohmann::json::array();
    for (const Exponent& p : c.p_list)
        ps.push_back(exponent_to_json(p));
    return {
        {"d", c.d},
        {"m", c.m_values},
        {"target", c.target == TargetKind::Teachers ? "teachers" : "spiky_sine"},
        {"teacher_class",
         {{"arch", c.teacher_class.arch}, {"c", c.teacher_class.c}, {"q", exponent_to_json(c.teacher_class.q)}}},
        {"n_teachers", c.n_teachers},
        {"student_archs", c.student_archs},
        {"batch_sizes", c.batch_sizes},
        {"n_seeds", c.n_seeds},
        {"n_eval", c.n_eval},
        {"p_list", ps},
        {"adam", adam_to_json(c.adam)},
        {"epochs", c.epochs},
        {"centered_domain", c.centered_domain},
        {"seed", c.seed},
    };
}

Mlp sample_teacher(const NetworkClass& cls, std::uint64_t seed) {
    if (!cls.q.is_infinite())
        throw PreconditionError("sample_teacher: the teacher class must have q = inf");
    Mlp net(cls.arch);
    Rng rng(seed);
    for (std::size_t i = 0; i < net.depth(); ++i) {
        Layer& l = net.layer(i);
        for (double& w : l.weights)
            w = rng.uniform(-cls.c, cls.c);
        for (double& b : l.bias)
            b = rng.uniform(-cls.c, cls.c);
    }
    return net;
}

Mlp init_student(const std::vector<std::size_t>& arch, std::uint64_t seed) {
    Mlp net(arch);
    Rng rng(seed);
    for (std::size_t i = 0; i < net.depth(); ++i) {
        Layer& l = net.layer(i);
        const double a = std::sqrt(1.0 / static_cast<double>(arch[i]));
        for (double& w : l.weights)
            w = rng.uniform(-a, a);
        for (double& b : l.bias)
            b = rng.uniform(-a, a);
    }
    return net;
}

TrainResult train_from(Mlp net, const GradientBatch& samples, std::size_t batch_size, std::size_t epochs,
                       const AdamParams& adam, std::uint64_t seed) {
    const std::size_t n = samples.inputs.size();
    if (n == 0 || samples.targets.size() != n)
        throw PreconditionError("train_student: need a nonempty, consistent sample set");
    if (batch_size < 1 || batch_size > n)
        throw PreconditionError("train_student: need 1 <= batch_size <= m");
    adam.validate();

    TrainResult out{net, batch_mse(net, samples), 0.0};
    if (!std::isfinite(out.initial_loss))
        throw TrainingDiverged("train_student: initial loss is not finite");

    Mlp first(net.arch()), second(net.arch());
    const double decay = epochs > 0 ? std::pow(adam.lr_final / adam.lr_init, 1.0 / static_cast<double>(epochs)) : 1.0;
    double lr = adam.lr_init;
    double beta1_t = 1.0, beta2_t = 1.0;
    Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    GradientBatch batch;

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t stop = std::min(n, start + batch_size);
            batch.inputs.clear();
            batch.targets.clear();
            for (std::size_t k = start; k < stop; ++k) {
                batch.inputs.push_back(samples.inputs[order[k]]);
                batch.targets.push_back(samples.targets[order[k]]);
            }
            const Mlp grad = backprop_grad(net, batch);
            beta1_t *= adam.beta1;
            beta2_t *= adam.beta2;
            const double step = lr * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
            for (std::size_t li = 0; li < net.depth(); ++li) {
                auto update = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& m1,
                                  std::vector<double>& m2) {
                    for (std::size_t k = 0; k < param.size(); ++k) {
                        m1[k] = adam.beta1 * m1[k] + (1.0 - adam.beta1) * g[k];
                        m2[k] = adam.beta2 * m2[k] + (1.0 - adam.beta2) * g[k] * g[k];
                        param[k] -= step * m1[k] / (std::sqrt(m2[k]) + adam.eps);
                    }
                };
                update(net.layer(li).weights, grad.layer(li).weights, first.layer(li).weights,
                       second.layer(li).weights);
                update(net.layer(li).bias, grad.layer(li).bias, first.layer(li).bias, second.layer(li).bias);
            }
        }
        lr *= decay;
        // Full-data loss every 64 epochs keeps the divergence check off the hot path.
        if (epoch + 1 == epochs || epoch % 64 == 63) {
            const double loss = batch_mse(net, samples);
            if (!std::isfinite(loss)) {
                std::ostringstream os;
                os << "train_student: loss became non-finite at epoch " << epoch + 1 << " (lr=" << lr
                   << ", batch=" << batch_size << "); lower lr_init";
                throw TrainingDiverged(os.str());
            }
        }
    }
    out.final_loss = batch_mse(net, samples);
    out.net = std::move(net);
    return out;
}

TrainResult train_student(const std::vector<std::size_t>& arch, const GradientBatch& samples, std::size_t batch_size,
                          std::size_t epochs, const AdamParams& adam, std::uint64_t seed) {
    return train_from(init_student(arch, derive_seed(seed, {0})), samples, batch_size, epochs, adam,
                      derive_seed(seed, {1}));
}

double spiky_sine(double x) { return std::log(std::sin(50.0 * x) + 2.0) + std::sin(5.0 * x); }

double ExperimentResult::err_hat(std::size_t m, Exponent p) const {
    for (const auto& e : table)
        if (e.m == m && e.p == p)
            return e.err_hat;
    throw std::out_of_range("err_hat: no entry for m=" + std::to_string(m) + ", p=" + p.to_string());
}

ExperimentResult estimate_err_hat(const ExperimentConfig& config) {
    config.validate();
    const std::size_t d = config.d;
    const double offset = config.centered_domain ? -0.5 : 0.0;
    const std::size_t n_targets = config.target == TargetKind::Teachers ? config.n_teachers : 1;

    auto draw_points = [&](std::uint64_t seed, std::size_t count) {
        Rng rng(seed);
        std::vector<Point> xs(count, Point(d));
        for (auto& x : xs)
            for (double& v : x)
                v = rng.uniform() + offset;
        return xs;
    };

    std::vector<Function> targets;
    std::vector<Mlp> teachers;
    if (config.target == TargetKind::Teachers) {
        for (std::size_t t = 0; t < n_targets; ++t)
            teachers.push_back(sample_teacher(config.teacher_class, derive_seed(config.seed, {kTeacherStream, t})));
        for (const Mlp& net : teachers)
            targets.push_back([&net](std::span<const double> x) { return forward_scalar(net, x); });
    } else {
        targets.push_back([](std::span<const double> x) { return spiky_sine(x[0]); });
    }

    const std::vector<Point> eval_points = draw_points(derive_seed(config.seed, {kEvalStream}), config.n_eval);
    std::vector<std::vector<double>> eval_targets(n_targets);
    for (std::size_t t = 0; t < n_targets; ++t) {
        eval_targets[t].resize(eval_points.size());
        parallel_for(eval_points.size(), [&](std::size_t j) { eval_targets[t][j] = targets[t](eval_points[j]); });
    }

    // Training sets are shared by all seeds and variants of a (target, m) pair.
    std::vector<std::vector<GradientBatch>> train_sets(config.m_values.size(), std::vector<GradientBatch>(n_targets));
    for (std::size_t mi = 0; mi < config.m_values.size(); ++mi)
        for (std::size_t t = 0; t < n_targets; ++t) {
            GradientBatch& b = train_sets[mi][t];
            b.inputs = draw_points(derive_seed(config.seed, {kTrainPointStream, t, config.m_values[mi]}),
                                   config.m_values[mi]);
            for (const Point& x : b.inputs)
                b.targets.push_back(targets[t](x));
        }

    const std::size_t n_variants = config.student_archs.size() * config.batch_sizes.size();
    struct Task {
        std::size_t mi, t, v, s;
    };
    std::vector<Task> tasks;
    for (std::size_t mi = 0; mi < config.m_values.size(); ++mi)
        for (std::size_t t = 0; t < n_targets; ++t)
            for (std::size_t v = 0; v < n_variants; ++v)
                for (std::size_t s = 0; s < config.n_seeds; ++s)
                    tasks.push_back({mi, t, v, s});

    ExperimentResult result;
    result.trials.resize(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t i) {
        const Task& task = tasks[i];
        TrialResult& r = result.trials[i];
        r.m = config.m_values[task.mi];
        r.teacher_id = task.t;
        r.seed_index = task.s;
        r.variant_index = task.v;
        r.student_arch = config.student_archs[task.v / config.batch_sizes.size()];
        r.batch_size = config.batch_sizes[task.v % config.batch_sizes.size()];

        const auto start = std::chrono::steady_clock::now();
        const TrainResult trained =
            train_student(r.student_arch, train_sets[task.mi][task.t], r.batch_size, config.epochs, config.adam,
                          derive_seed(config.seed, {kTrialStream, task.t, task.s, task.v, r.m}));
        r.train_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.initial_loss = trained.initial_loss;
        r.final_loss = trained.final_loss;
        r.flagged = trained.final_loss > trained.initial_loss;

        std::vector<double> abs_err(eval_points.size());
        for (std::size_t j = 0; j < eval_points.size(); ++j)
            abs_err[j] = std::abs(eval_targets[task.t][j] - forward_scalar(trained.net, eval_points[j]));
        r.errors = errors_for(abs_err, config.p_list);
    });

    // inf over variants of the seed mean, then sup over targets.
    for (std::size_t mi = 0; mi < config.m_values.size(); ++mi) {
        for (std::size_t pi = 0; pi < config.p_list.size(); ++pi) {
            double sup = 0.0;
            for (std::size_t t = 0; t < n_targets; ++t) {
                double inf = std::numeric_limits<double>::infinity();
                for (std::size_t v = 0; v < n_variants; ++v) {
                    std::vector<double> per_seed;
                    for (const TrialResult& r : result.trials)
                        if (r.m == config.m_values[mi] && r.teacher_id == t && r.variant_index == v)
                            per_seed.push_back(r.errors[pi]);
                    inf = std::min(inf, pairwise_sum(per_seed) / static_cast<double>(per_seed.size()));
                }
                sup = std::max(sup, inf);
            }
            result.table.push_back({config.m_values[mi], config.p_list[pi], sup});
        }
    }
    return result;
}

std::string trials_csv(const ExperimentConfig& config, const ExperimentResult& result, bool with_timing) {
    std::ostringstream os;
    os << "m,teacher_id,seed,arch,batch,p,error,epochs,initial_loss,final_loss,flagged,wall_s\n";
    for (const TrialResult& r : result.trials) {
        std::string arch;
        for (std::size_t i = 0; i < r.student_arch.size(); ++i)
            arch += (i ? "-" : "") + std::to_string(r.student_arch[i]);
        for (std::size_t pi = 0; pi < config.p_list.size(); ++pi)
            os << r.m << ',' << r.teacher_id << ',' << r.seed_index << ',' << arch << ',' << r.batch_size << ','
               << config.p_list[pi].to_string() << ',' << fmt(r.errors[pi]) << ',' << config.epochs << ','
               << fmt(r.initial_loss) << ',' << fmt(r.final_loss) << ',' << (r.flagged ? "true" : "false") << ','
               << (with_timing ? fmt(r.train_time) : "0") << '\n';
    }
    return os.str();
}

nlohmann::json err_hat_json(const ExperimentConfig& config, const ExperimentResult& result) {
    nlohmann::json table = nlohmann::json::array();
    nlohmann::json series = nlohmann::json::object();
    for (const ErrHatEntry& e : result.table) {
        table.push_back({{"m", e.m}, {"p", exponent_to_json(e.p)}, {"err_hat", e.err_hat}});
        series[e.p.to_string()].push_back(nlohmann::json::array({e.m, e.err_hat}));
    }
    std::size_t flagged = 0;
    for (const TrialResult& r : result.trials)
        flagged += r.flagged ? 1 : 0;
    return {{"config", to_json(config)},
            {"table", table},
            {"series", series},
            {"n_trials", result.trials.size()},
            {"flagged_trials", flagged}};
}

StudentRecipe student_recipe_from_json(const nlohmann::json& j) {
    try {
        StudentRecipe r;
        if (j.contains("arch"))
            r.arch = j.at("arch").get<std::vector<std::size_t>>();
        r.batch_size = j.value("batch_size", r.batch_size);
        r.epochs = j.value("epochs", r.epochs);
        if (j.contains("adam"))
            r.adam = adam_from_json(j.at("adam"));
        r.seed = j.value("seed", r.seed);
        r.adam.validate();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError(std::string("student recipe: ") + e.what());
    }
}

DeterministicMethod student_method(std::size_t d, std::size_t m, const StudentRecipe& recipe) {
    check_arch(recipe.arch, d, "student");
    if (m < 1 || recipe.batch_size < 1 || recipe.batch_size > m)
        throw PreconditionError("student method: need 1 <= batch_size <= m");
    DeterministicMethod method;
    method.name = "student";
    method.dim = d;
    method.budget = m;
    method.run = [d, m, recipe](Oracle& oracle) -> Predictor {
        Rng rng(derive_seed(recipe.seed, {kQueryStream}));
        GradientBatch samples;
        Point x(d);
        for (std::size_t i = 0; i < m; ++i) {
            for (double& v : x)
                v = rng.uniform();
            const double value = oracle(x);
            samples.inputs.push_back(to_centered_cube(x));
            samples.targets.push_back(value);
        }
        auto net = std::make_shared<Mlp>(
            train_student(recipe.arch, samples, recipe.batch_size, recipe.epochs, recipe.adam, recipe.seed).net);
        return [net](std::span<const double> p) { return forward_scalar(*net, to_centered_cube(p)); };
    };
    return method;
}

} // namespace unilearn
