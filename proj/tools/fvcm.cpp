// Command-line frontend: simulate, fit, predict, cv, benchmark and
// convert-histogram subcommands over the library's CSV/JSON formats.

#include "fvcm/fvcm.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace {

using namespace fvcm;

std::vector<double> parse_list(const std::string& csv, const char* flag) {
    try {
        return parse_double_list(csv, flag);
    } catch (const ParseError&) {
        throw ValidationError(std::string(flag) + ": expected a comma-separated number list, got '" +
                              csv + "'");
    }
}

Weighting parse_weighting(const std::string& s) {
    if (s == "constant") return Weighting::LocalConstant;
    if (s == "linear") return Weighting::LocalLinear;
    if (s == "ball") return Weighting::MetricBall;
    throw ValidationError("--weights: expected constant, linear or ball, got '" + s + "'");
}

struct SimulateArgs {
    int example = 1;
    int n = 100;
    int n_test = 1000;
    std::string gammas = "1,1";
    std::uint64_t seed = 0;
    int m = 20;
    std::string out_train;
    std::string out_test;
    std::string out_truth;
};

int run_simulate(const SimulateArgs& a) {
    const auto g = parse_list(a.gammas, "--gammas");
    if (g.size() != 2) throw ValidationError("--gammas: expected two values, e.g. 3,3");
    DGPConfig cfg = make_dgp_config(a.example, a.n, g[0], g[1], a.seed, a.n_test, a.m);
    visit_example(cfg, [&](const auto& data) {
        write_dataset(a.out_train, data.train);
        if (!a.out_test.empty()) write_dataset(a.out_test, data.test);
        if (!a.out_truth.empty()) {
            auto truth_set = data.test;
            truth_set.Y = data.truth;
            write_dataset(a.out_truth, truth_set);
        }
    });
    std::cerr << "wrote " << a.out_train;
    if (!a.out_test.empty()) std::cerr << " and " << a.out_test;
    std::cerr << "\n";
    return 0;
}

struct DataArgs {
    std::string data;
    std::string response = "scalar";
    std::string modifier = "scalar";
    int m = 0;
    int M = 0;
    int p = -1;
};

DatasetSchema schema_from_header(const DataArgs& a) {
    // Infer block widths from the header, then check against declared flags.
    std::ifstream in(a.data);
    if (!in) throw ValidationError("cannot open '" + a.data + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(a.data + ": empty file, expected a header");
    const auto cols = split_csv_line(line);

    DatasetSchema s;
    s.response = parse_response_type(a.response);
    s.modifier = parse_modifier_type(a.modifier);
    int np = 0, nu = 0, ny = 0;
    for (const auto& c : cols) {
        if (c.rfind("x", 0) == 0 && c.find('_') == std::string::npos) ++np;
        else if (c.rfind("u", 0) == 0) ++nu;
        else if (c.rfind("y", 0) == 0) ++ny;
    }
    s.p = np;
    switch (s.modifier) {
        case ModifierType::Scalar: s.modifier_dim = 0; break;
        case ModifierType::Quantile: s.modifier_dim = nu; break;
        case ModifierType::Spd: {
            const int dim = static_cast<int>(std::lround(std::sqrt(double(nu))));
            if (dim * dim != nu) {
                throw ValidationError(a.data + ": " + std::to_string(nu) +
                                      " modifier columns do not form a square matrix");
            }
            s.modifier_dim = dim;
            break;
        }
    }
    switch (s.response) {
        case ResponseType::Scalar: s.response_dim = 0; break;
        case ResponseType::Quantile: s.response_dim = ny; break;
        case ResponseType::Spd: {
            const int dim = static_cast<int>(std::lround(std::sqrt(double(ny))));
            if (ny > 0 && dim * dim != ny) {
                throw ValidationError(a.data + ": " + std::to_string(ny) +
                                      " response columns do not form a square matrix");
            }
            s.response_dim = dim;
            break;
        }
    }
    if (a.m > 0 && s.response == ResponseType::Quantile && s.response_dim != a.m) {
        throw ValidationError("--m: declared " + std::to_string(a.m) + " but '" + a.data +
                              "' has " + std::to_string(s.response_dim) + " quantile columns");
    }
    if (a.M > 0 && s.response == ResponseType::Spd && s.response_dim != a.M) {
        throw ValidationError("--M: declared " + std::to_string(a.M) + " but '" + a.data +
                              "' has response dimension " + std::to_string(s.response_dim));
    }
    if (a.p >= 0 && s.p != a.p) {
        throw ValidationError("--p: declared " + std::to_string(a.p) + " but '" + a.data +
                              "' has " + std::to_string(s.p) + " predictor columns");
    }
    return s;
}

struct FitArgs {
    DataArgs data;
    std::string method = "vfr";
    std::string weights;
    double bandwidth = -1.0;
    double ridge = -1.0;
    std::string model_path;
};

int run_fit(const FitArgs& a) {
    const DatasetSchema schema = schema_from_header(a.data);
    Model model;
    model.method = parse_method(a.method);
    model.training = read_dataset(a.data.data, schema);

    std::string weights = a.weights;
    if (weights.empty()) {
        weights = schema.modifier == ModifierType::Scalar ? "constant" : "ball";
    }
    model.weighting = parse_weighting(weights);
    if (schema.modifier != ModifierType::Scalar && model.weighting != Weighting::MetricBall) {
        throw ValidationError("--weights: metric-space modifiers require 'ball'");
    }
    if (schema.modifier == ModifierType::Scalar && model.weighting == Weighting::MetricBall) {
        throw ValidationError("--weights: 'ball' applies only to metric-space modifiers");
    }
    if (model.method != Method::Gfr) {
        if (!(a.bandwidth > 0.0)) {
            throw ValidationError("--bandwidth: required (positive) for method '" + a.method + "'");
        }
        model.bandwidth = a.bandwidth;
    }
    if (a.ridge >= 0.0) model.ridge = a.ridge;

    // Construct once so configuration problems surface at fit time.
    std::visit(
        [&](const auto& ts) {
            using TS = std::decay_t<decltype(ts)>;
            using Space = std::conditional_t<
                std::is_same_v<typename TS::Point, double>, ScalarSpace,
                std::conditional_t<std::is_same_v<typename TS::Point, QuantileFunction>,
                                   WassersteinSpace, CholeskySpace>>;
            using Modifier = std::decay_t<decltype(ts.U)>;
            const Kernel kernel;
            switch (model.method) {
                case Method::Gfr: (void)GfrPredictor<Space, Modifier>(ts, model.ridge); break;
                case Method::Lfr: (void)LfrPredictor<Space, Modifier>(ts, *model.bandwidth); break;
                case Method::Pfr:
                    (void)PfrPredictor<Space, Modifier>(ts, {model.weighting, *model.bandwidth},
                                                        kernel, model.ridge);
                    break;
                case Method::Vfr:
                    (void)VfrPredictor<Space, Modifier>(ts, {model.weighting, *model.bandwidth},
                                                        kernel, model.ridge);
                    break;
            }
        },
        model.training);

    write_model(a.model_path, model);
    std::cerr << "wrote " << a.model_path << "\n";
    return 0;
}

struct PredictArgs {
    std::string model_path;
    std::string data;
    std::string out;
    int threads = 0;
};

template <class Space, class Modifier>
std::vector<typename Space::Point> predict_all(const Model& model,
                                               const TrainingSet<Space, Modifier>& ts,
                                               const QuerySet<Modifier>& queries, int threads) {
    const Kernel kernel;
    const int q = static_cast<int>(queries.U.values.size());
    std::vector<std::optional<typename Space::Point>> slots(static_cast<std::size_t>(q));
    auto run = [&](auto&& predict_one) {
        parallel_for(q, threads, [&](int i) {
            slots[static_cast<std::size_t>(i)] =
                predict_one(queries.X.row(i).transpose(),
                            queries.U.values[static_cast<std::size_t>(i)]);
        });
    };
    switch (model.method) {
        case Method::Gfr: {
            GfrPredictor<Space, Modifier> fitted(ts, model.ridge);
            run([&](const Eigen::VectorXd& x, const auto& u) { return fitted.predict(x, u); });
            break;
        }
        case Method::Lfr: {
            LfrPredictor<Space, Modifier> fitted(ts, *model.bandwidth);
            run([&](const Eigen::VectorXd& x, const auto& u) { return fitted.predict(x, u); });
            break;
        }
        case Method::Pfr: {
            PfrPredictor<Space, Modifier> fitted(ts, {model.weighting, *model.bandwidth}, kernel,
                                                 model.ridge);
            run([&](const Eigen::VectorXd& x, const auto& u) { return fitted.predict(x, u); });
            break;
        }
        case Method::Vfr: {
            VfrPredictor<Space, Modifier> fitted(ts, {model.weighting, *model.bandwidth}, kernel,
                                                 model.ridge);
            auto batch = fitted.predict_batch(queries.X, queries.U.values, threads);
            for (int i = 0; i < q; ++i) slots[static_cast<std::size_t>(i)] = std::move(batch[static_cast<std::size_t>(i)]);
            break;
        }
    }
    std::vector<typename Space::Point> out;
    out.reserve(static_cast<std::size_t>(q));
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

int run_predict(const PredictArgs& a) {
    const Model model = read_model(a.model_path);
    const DatasetSchema schema = schema_of(model.training);
    const AnyQuerySet queries = read_queries(a.data, schema);

    std::ofstream out(a.out);
    if (!out) throw ValidationError("cannot open '" + a.out + "' for writing");
    std::visit(
        [&](const auto& ts) {
            using TS = std::decay_t<decltype(ts)>;
            using Space = std::conditional_t<
                std::is_same_v<typename TS::Point, double>, ScalarSpace,
                std::conditional_t<std::is_same_v<typename TS::Point, QuantileFunction>,
                                   WassersteinSpace, CholeskySpace>>;
            using Modifier = std::decay_t<decltype(ts.U)>;
            const auto& qs = std::get<QuerySet<Modifier>>(queries);
            const auto preds = predict_all<Space, Modifier>(model, ts, qs, a.threads);
            write_predictions(out, preds);
        },
        model.training);
    if (!out) throw ValidationError("write failed for '" + a.out + "'");
    std::cerr << "wrote " << a.out << "\n";
    return 0;
}

struct CvArgs {
    DataArgs data;
    std::string method = "vfr";
    std::string weights;
    std::string grid;
    bool scale_grid = false;
    int folds = 10;
    std::uint64_t seed = 0;
    double ridge = -1.0;
    std::string out;
};

int run_cv(const CvArgs& a) {
    const DatasetSchema schema = schema_from_header(a.data);
    const Method method = parse_method(a.method);
    if (method == Method::Gfr) throw ValidationError("cv: gfr has no bandwidth to select");
    const AnyDataset ds = read_dataset(a.data.data, schema);

    std::string weights = a.weights;
    if (weights.empty()) weights = schema.modifier == ModifierType::Scalar ? "constant" : "ball";
    const Weighting weighting = parse_weighting(weights);

    CVConfig cv;
    if (!a.grid.empty()) cv.grid = parse_list(a.grid, "--grid");
    cv.folds = a.folds;
    cv.seed = a.seed;
    cv.scale_grid_to_modifier = a.scale_grid;
    std::optional<double> ridge;
    if (a.ridge >= 0.0) ridge = a.ridge;

    const CVResult result = std::visit(
        [&](const auto& ts) {
            using TS = std::decay_t<decltype(ts)>;
            using Space = std::conditional_t<
                std::is_same_v<typename TS::Point, double>, ScalarSpace,
                std::conditional_t<std::is_same_v<typename TS::Point, QuantileFunction>,
                                   WassersteinSpace, CholeskySpace>>;
            using Modifier = std::decay_t<decltype(ts.U)>;
            const Kernel kernel;
            switch (method) {
                case Method::Lfr: {
                    auto factory = [&](const TrainingSet<Space, Modifier>& tr, double h) {
                        return LfrPredictor<Space, Modifier>(tr, h, kernel);
                    };
                    return select_bandwidth(ts, factory, cv);
                }
                case Method::Pfr: {
                    auto factory = [&](const TrainingSet<Space, Modifier>& tr, double h) {
                        return PfrPredictor<Space, Modifier>(tr, {weighting, h}, kernel, ridge);
                    };
                    return select_bandwidth(ts, factory, cv);
                }
                default: {
                    auto factory = [&](const TrainingSet<Space, Modifier>& tr, double h) {
                        return VfrPredictor<Space, Modifier>(tr, {weighting, h}, kernel, ridge);
                    };
                    return select_bandwidth(ts, factory, cv);
                }
            }
        },
        ds);

    std::ostringstream table;
    table << "bandwidth,cv_error\n";
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
        table << format_double(result.grid[i]) << ','
              << (std::isfinite(result.cv_errors[i]) ? format_double(result.cv_errors[i]) : "inf")
              << '\n';
    }
    std::cout << "chosen_bandwidth," << format_double(result.chosen_bandwidth) << '\n';
    std::cout << table.str();
    if (!a.out.empty()) {
        std::ofstream f(a.out);
        if (!f) throw ValidationError("cannot open '" + a.out + "' for writing");
        f << "chosen_bandwidth," << format_double(result.chosen_bandwidth) << '\n' << table.str();
    }
    return 0;
}

struct BenchmarkArgs {
    int example = 1;
    std::string gammas = "1,1";
    std::string n_list = "200";
    std::string methods = "gfr,lfr,pfr,vfr";
    int reps = 50;
    std::uint64_t seed = 0;
    int n_test = 1000;
    int m = 20;
    std::string grid;
    int folds = 10;
    std::string vfr_weights = "constant";
    double ridge = -1.0;
    int threads = 0;
    std::string out;
};

int run_benchmark_cmd(const BenchmarkArgs& a) {
    BenchmarkConfig cfg;
    cfg.example = a.example;
    const auto g = parse_list(a.gammas, "--gammas");
    if (g.size() != 2) throw ValidationError("--gammas: expected two values, e.g. 3,3");
    cfg.gamma2 = g[0];
    cfg.gamma3 = g[1];
    cfg.n_train.clear();
    for (double n : parse_list(a.n_list, "--n")) {
        if (n < 1 || n != std::floor(n)) throw ValidationError("--n: expected positive integers");
        cfg.n_train.push_back(static_cast<int>(n));
    }
    cfg.methods.clear();
    {
        std::stringstream ss(a.methods);
        std::string tok;
        while (std::getline(ss, tok, ',')) cfg.methods.push_back(parse_method(tok));
    }
    cfg.reps = a.reps;
    cfg.seed = a.seed;
    cfg.n_test = a.n_test;
    cfg.m = a.m;
    if (!a.grid.empty()) cfg.grid = parse_list(a.grid, "--grid");
    cfg.folds = a.folds;
    cfg.vfr_weighting = parse_weighting(a.vfr_weights);
    if (cfg.vfr_weighting == Weighting::MetricBall) {
        throw ValidationError("--vfr-weights: choose constant or linear (metric modifiers switch "
                              "to ball automatically)");
    }
    if (a.ridge >= 0.0) cfg.ridge = a.ridge;
    cfg.threads = a.threads;

    const auto cells = run_benchmark(cfg);
    print_benchmark_table(std::cout, cells);
    if (!a.out.empty()) {
        std::ofstream f(a.out);
        if (!f) throw ValidationError("cannot open '" + a.out + "' for writing");
        write_benchmark_csv(f, cells);
        if (!f) throw ValidationError("write failed for '" + a.out + "'");
    }
    return 0;
}

struct HistArgs {
    std::string in;
    int m = 20;
    std::string out;
};

int run_convert_histogram(const HistArgs& a) {
    std::ifstream in(a.in);
    if (!in) throw ValidationError("cannot open '" + a.in + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(a.in + ": empty file, expected a header");
    const auto header = split_csv_line(line);
    int n_edges = 0, n_counts = 0;
    for (const auto& c : header) {
        if (c.rfind("edge_", 0) == 0) ++n_edges;
        else if (c.rfind("count_", 0) == 0) ++n_counts;
        else throw ParseError(a.in + ": unexpected column '" + c + "'");
    }
    if (n_edges != n_counts + 1 || n_counts < 1) {
        throw ParseError(a.in + ": expected edge_0..edge_B followed by count_1..count_B");
    }

    std::ofstream out(a.out);
    if (!out) throw ValidationError("cannot open '" + a.out + "' for writing");
    for (int i = 1; i <= a.m; ++i) out << (i > 1 ? "," : "") << 'q' << i;
    out << '\n';
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto vals = parse_double_list(line, a.in + ":" + std::to_string(lineno));
        if (static_cast<int>(vals.size()) != n_edges + n_counts) {
            throw ParseError(a.in + ":" + std::to_string(lineno) + ": wrong field count");
        }
        HistogramRecord rec;
        rec.edges.assign(vals.begin(), vals.begin() + n_edges);
        rec.counts.assign(vals.begin() + n_edges, vals.end());
        QuantileFunction q = [&] {
            try {
                return histogram_to_quantile(rec, a.m);
            } catch (const ValidationError& e) {
                throw ValidationError(a.in + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }();
        for (int i = 0; i < q.size(); ++i)
            out << (i ? "," : "") << format_double(q[static_cast<std::size_t>(i)]);
        out << '\n';
    }
    if (!out) throw ValidationError("write failed for '" + a.out + "'");
    std::cerr << "wrote " << a.out << "\n";
    return 0;
}

void add_data_flags(CLI::App* cmd, DataArgs& d) {
    cmd->add_option("--data", d.data, "input dataset CSV")->required();
    cmd->add_option("--response", d.response, "response type: scalar, quantile or spd")
        ->required();
    cmd->add_option("--modifier", d.modifier,
                    "effect-modifier type: scalar, quantile or spd (default scalar)");
    cmd->add_option("--m", d.m, "expected quantile grid size of the response");
    cmd->add_option("--M", d.M, "expected matrix dimension of the response");
    cmd->add_option("--p", d.p, "expected number of predictor columns");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"varying-coefficient Fréchet regression toolkit"};
    app.require_subcommand(1);
    const int default_threads = fvcm::hardware_threads();

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "draw a simulation-design dataset");
    c_sim->add_option("--example", sim.example, "design index 1..6")->required();
    c_sim->add_option("--n", sim.n, "training sample size")->required();
    c_sim->add_option("--n-test", sim.n_test, "test sample size (default 1000)");
    c_sim->add_option("--gammas", sim.gammas, "gamma2,gamma3 (default 1,1)");
    c_sim->add_option("--seed", sim.seed, "RNG seed")->required();
    c_sim->add_option("--m", sim.m, "quantile grid size (default 20)");
    c_sim->add_option("--out-train", sim.out_train, "training CSV path")->required();
    c_sim->add_option("--out-test", sim.out_test, "test CSV path");
    c_sim->add_option("--out-truth", sim.out_truth,
                      "noiseless regression-function CSV path (test features + truth responses)");

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "fit a model and persist it as JSON");
    add_data_flags(c_fit, fit.data);
    c_fit->add_option("--method", fit.method, "gfr, lfr, pfr or vfr")->required();
    c_fit->add_option("--weights", fit.weights,
                      "smoothing weights: constant, linear or ball (default by modifier type)");
    c_fit->add_option("--bandwidth", fit.bandwidth, "bandwidth (required except for gfr)");
    c_fit->add_option("--ridge", fit.ridge, "explicit ridge for local covariances");
    c_fit->add_option("--model", fit.model_path, "output model JSON path")->required();

    PredictArgs pred;
    auto* c_pred = app.add_subcommand("predict", "predict with a persisted model");
    c_pred->add_option("--model", pred.model_path, "model JSON path")->required();
    c_pred->add_option("--data", pred.data, "query CSV (x and u columns; y optional)")->required();
    c_pred->add_option("--out", pred.out, "output predictions CSV")->required();
    c_pred->add_option("--threads", pred.threads, "worker threads (default: all cores)")
        ->envname("FRECHET_VCM_THREADS");

    CvArgs cv;
    auto* c_cv = app.add_subcommand("cv", "k-fold cross-validated bandwidth selection");
    add_data_flags(c_cv, cv.data);
    c_cv->add_option("--method", cv.method, "lfr, pfr or vfr")->required();
    c_cv->add_option("--weights", cv.weights, "smoothing weights (default by modifier type)");
    c_cv->add_option("--grid", cv.grid, "bandwidth grid (default 0.05,0.1,...,0.3)");
    c_cv->add_flag("--scale-grid", cv.scale_grid,
                   "scale the grid by the sd of the pairwise modifier distances");
    c_cv->add_option("--folds", cv.folds, "number of folds (default 10)");
    c_cv->add_option("--seed", cv.seed, "fold-assignment seed")->required();
    c_cv->add_option("--ridge", cv.ridge, "explicit ridge for local covariances");
    c_cv->add_option("--out", cv.out, "also write the per-bandwidth table to this CSV");

    BenchmarkArgs bench;
    auto* c_bench = app.add_subcommand("benchmark", "Monte-Carlo method comparison on a design");
    c_bench->add_option("--example", bench.example, "design index 1..6")->required();
    c_bench->add_option("--gammas", bench.gammas, "gamma2,gamma3 (default 1,1)");
    c_bench->add_option("--n", bench.n_list, "training sizes, comma separated (default 200)");
    c_bench->add_option("--methods", bench.methods, "subset of gfr,lfr,pfr,vfr");
    c_bench->add_option("--reps", bench.reps, "replications (default 50)");
    c_bench->add_option("--seed", bench.seed, "RNG seed")->required();
    c_bench->add_option("--n-test", bench.n_test, "test sample size (default 1000)");
    c_bench->add_option("--m", bench.m, "quantile grid size (default 20)");
    c_bench->add_option("--grid", bench.grid, "bandwidth grid for cross-validation");
    c_bench->add_option("--folds", bench.folds, "cross-validation folds (default 10)");
    c_bench->add_option("--vfr-weights", bench.vfr_weights,
                        "vfr smoothing for scalar modifiers: constant or linear");
    c_bench->add_option("--ridge", bench.ridge, "explicit ridge for local covariances");
    c_bench->add_option("--threads", bench.threads, "worker threads (default: all cores)")
        ->envname("FRECHET_VCM_THREADS");
    c_bench->add_option("--out", bench.out, "output CSV path");

    HistArgs hist;
    auto* c_hist = app.add_subcommand("convert-histogram",
                                      "convert histogram rows to quantile-function rows");
    c_hist->add_option("--in", hist.in, "histogram CSV (edge_0..edge_B,count_1..count_B)")
        ->required();
    c_hist->add_option("--m", hist.m, "quantile grid size (default 20)");
    c_hist->add_option("--out", hist.out, "output quantile CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (pred.threads <= 0) pred.threads = default_threads;
        if (bench.threads <= 0) bench.threads = default_threads;
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_fit->parsed()) return run_fit(fit);
        if (c_pred->parsed()) return run_predict(pred);
        if (c_cv->parsed()) return run_cv(cv);
        if (c_bench->parsed()) return run_benchmark_cmd(bench);
        if (c_hist->parsed()) return run_convert_histogram(hist);
    } catch (const fvcm::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fvcm::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
