// bilaf: command-line front end for the two-stage sample-selection pipeline.
//
// Subcommands: generate a synthetic feature pool, select samples (bilaf or a
// baseline), evaluate selections with the nearest-centroid proxy, sweep
// ablation grids, and export a 2-D PCA projection for plotting. Every run is
// deterministic given its flags; all file outputs carry the producing
// configuration in their headers.
//
// Exit codes: 0 ok, 1 usage or bad parameters, 2 data/file errors,
// 3 internal invariant violations.

#include "bilaf/bilaf.hpp"
#include "bilaf/serialize.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace bilaf;

struct PoolArgs {
    std::string path;
    std::string format = "auto";
    bool normalize = false;
};

void add_pool_flags(CLI::App* cmd, PoolArgs& args) {
    cmd->add_option("--pool", args.path, "feature pool file")->required();
    cmd->add_option("--format", args.format, "pool file format (auto, binary, csv)")
        ->check(CLI::IsMember({"auto", "binary", "csv"}))
        ->capture_default_str();
    cmd->add_flag("--normalize", args.normalize, "L2-normalize rows when loading csv pools");
}

FeaturePool load_pool_args(const PoolArgs& args) {
    std::string format = args.format;
    if (format == "auto") {
        std::ifstream probe(args.path, std::ios::binary);
        if (!probe) throw io_error("cannot open pool file: " + args.path);
        char magic[4] = {};
        probe.read(magic, 4);
        format = (probe.gcount() == 4 && std::string_view(magic, 4) == "BLAF") ? "binary" : "csv";
    }
    return load_pool(args.path, format == "binary" ? PoolFormat::binary : PoolFormat::csv,
                     args.normalize);
}

struct SelectionArgs {
    SelectionConfig config;
    std::string denoise = "idc";
    std::string criterion = "bs";
    std::string process = "isr";
    std::string opponent_penalty = "on";

    SelectionConfig resolve() const {
        SelectionConfig cfg = config;
        cfg.denoise = parse_denoise(denoise);
        cfg.criterion = parse_criterion(criterion);
        cfg.process = parse_process(process);
        if (opponent_penalty == "on") {
            cfg.use_opponent_penalty = true;
        } else if (opponent_penalty == "off") {
            cfg.use_opponent_penalty = false;
        } else {
            throw config_error("--opponent-penalty must be on or off");
        }
        return cfg;
    }
};

void add_selection_flags(CLI::App* cmd, SelectionArgs& args) {
    cmd->add_option("--budget", args.config.budget, "annotation budget B")->capture_default_str();
    cmd->add_option("--cores", args.config.core_count, "pseudo-class center count K")
        ->capture_default_str();
    cmd->add_option("--knn-k", args.config.knn_k, "density neighbor count k")
        ->capture_default_str();
    cmd->add_option("--removal-ratio", args.config.removal_ratio, "denoise removal fraction")
        ->capture_default_str();
    cmd->add_option("--include-fraction", args.config.include_fraction,
                    "IDC per-round inclusion fraction")
        ->capture_default_str();
    cmd->add_option("--delta", args.config.opponent_delta, "opponent penalty coefficient")
        ->capture_default_str();
    cmd->add_option("--denoise", args.denoise, "denoise strategy (idc, db, dg, none)")
        ->check(CLI::IsMember({"idc", "db", "dg", "none"}))
        ->capture_default_str();
    cmd->add_option("--criterion", args.criterion, "selection criterion (bs, bd)")
        ->check(CLI::IsMember({"bs", "bd"}))
        ->capture_default_str();
    cmd->add_option("--process", args.process, "selection process (isr, os)")
        ->check(CLI::IsMember({"isr", "os"}))
        ->capture_default_str();
    cmd->add_option("--opponent-penalty", args.opponent_penalty, "opponent penalty (on, off)")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    cmd->add_option("--seed", args.config.seed, "root seed")->capture_default_str();
}

std::vector<std::size_t> run_method(const std::string& method, const FeaturePool& pool,
                                    const SelectionConfig& cfg, std::uint64_t seed) {
    if (method == "bilaf") {
        SelectionConfig run = cfg;
        run.seed = seed;
        const SelectionResult result = run_bilaf(pool, run);
        std::vector<std::size_t> out;
        out.reserve(result.selected.size());
        for (const auto& p : result.selected) out.push_back(p.index);
        return out;
    }
    BaselineConfig base;
    base.budget = cfg.budget;
    base.seed = seed;
    if (method == "random") {
        base.method = BaselineMethod::random;
    } else if (method == "fds") {
        base.method = BaselineMethod::fds;
    } else if (method == "kmeans") {
        base.method = BaselineMethod::kmeans;
    } else {
        throw config_error("unknown method \"" + method +
                           "\" (expected bilaf, random, fds, or kmeans)");
    }
    return run_baseline(pool, base);
}

void write_lines(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw io_error("write failed: " + path.string());
}

std::string header_block(const std::string& subcommand, const ConfigEcho& echo) {
    std::ostringstream os;
    os << "# bilaf " << subcommand << "\n";
    for (const auto& [key, value] : echo) os << "# " << key << " = " << value << "\n";
    return os.str();
}

// ---- generate ----

struct GenerateArgs {
    MixtureSpec spec;
    std::string out;
};

int cmd_generate(const GenerateArgs& args) {
    const FeaturePool pool = generate_mixture(args.spec);
    save_pool(pool, args.out);
    std::cout << "wrote " << pool.n << "x" << pool.dim << " pool to " << args.out << "\n";
    return 0;
}

// ---- select ----

struct SelectArgs {
    PoolArgs pool;
    SelectionArgs selection;
    std::string method = "bilaf";
    std::string out_dir = ".";
};

int cmd_select(const SelectArgs& args) {
    const FeaturePool pool = load_pool_args(args.pool);
    const SelectionConfig cfg = args.selection.resolve();
    std::filesystem::create_directories(args.out_dir);

    ConfigEcho echo = echo_selection_config(cfg);
    echo.insert(echo.begin(), {"method", args.method});
    echo.insert(echo.begin() + 1, {"pool", args.pool.path});

    std::vector<std::size_t> indices;
    if (args.method == "bilaf") {
        SelectionConfig run = cfg;
        Warnings warn;
        const SelectionResult result = run_bilaf(pool, run, &warn);
        for (const auto& p : result.selected) indices.push_back(p.index);
        write_selection_json(std::filesystem::path(args.out_dir) / "selection.json", result, echo);
        for (const auto& msg : warn.messages) std::cerr << "warning: " << msg << "\n";
    } else {
        indices = run_method(args.method, pool, cfg,
                             split_seed(cfg.seed, "baseline/" + args.method));
        SelectionResult flat;
        flat.per_cluster_budget = {};
        for (std::size_t idx : indices) {
            SelectionPick p;
            p.index = idx;
            p.pseudo_class = 0;
            p.stage = PickStage::core;
            flat.selected.push_back(std::move(p));
        }
        write_selection_json(std::filesystem::path(args.out_dir) / "selection.json", flat, echo);
    }
    write_indices_txt(std::filesystem::path(args.out_dir) / "selected_indices.txt", indices, echo);
    std::cout << "selected " << indices.size() << " samples into " << args.out_dir << "\n";
    return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
    PoolArgs pool;
    SelectionArgs selection;
    std::string selection_file;
    std::vector<std::string> methods;
    std::size_t trials = 1;
    std::string out_dir = ".";
};

int cmd_evaluate(const EvaluateArgs& args) {
    const FeaturePool pool = load_pool_args(args.pool);
    const SelectionConfig cfg = args.selection.resolve();
    std::filesystem::create_directories(args.out_dir);

    ConfigEcho echo = echo_selection_config(cfg);
    echo.insert(echo.begin(), {"pool", args.pool.path});
    echo.emplace_back("trials", std::to_string(args.trials));

    std::ostringstream csv;
    csv << header_block("evaluate", echo);
    csv << "method,trial,accuracy,coverage,margin\n";

    if (!args.selection_file.empty()) {
        const std::vector<std::size_t> indices = read_indices_txt(args.selection_file);
        const EvalReport report = evaluate_selection(pool, indices);
        csv << "selection-file,0," << fmt_g(report.top1_accuracy) << ','
            << fmt_g(report.class_coverage) << ',' << fmt_g(report.mean_boundary_margin) << "\n";
        write_lines(std::filesystem::path(args.out_dir) / "evaluation.csv", csv.str());
        std::cout << "accuracy " << fmt_g(report.top1_accuracy) << ", coverage "
                  << fmt_g(report.class_coverage) << "\n";
        return 0;
    }

    std::vector<std::string> methods = args.methods;
    if (methods.empty()) methods = {"bilaf", "random", "fds", "kmeans"};
    std::vector<std::pair<std::string, Selector>> selectors;
    for (const std::string& m : methods)
        selectors.emplace_back(m, [&, m](const FeaturePool& p, std::uint64_t seed) {
            return run_method(m, p, cfg, seed);
        });

    const ComparisonTable table = compare_methods(pool, selectors, args.trials, cfg.seed);
    for (const TrialRow& row : table.rows)
        csv << row.method << ',' << row.trial << ',' << fmt_g(row.accuracy) << ','
            << fmt_g(row.coverage) << ',' << fmt_g(row.margin) << "\n";
    write_lines(std::filesystem::path(args.out_dir) / "evaluation.csv", csv.str());

    std::ostringstream summary;
    summary << header_block("evaluate", echo);
    summary << "method,mean_accuracy,std_accuracy,trials\n";
    for (const MethodSummary& s : table.summary)
        summary << s.method << ',' << fmt_g(s.mean_accuracy) << ',' << fmt_g(s.std_accuracy)
                << ',' << s.trials << "\n";
    write_lines(std::filesystem::path(args.out_dir) / "summary.csv", summary.str());

    for (const MethodSummary& s : table.summary)
        std::cout << s.method << ": " << fmt_g(s.mean_accuracy) << " +- "
                  << fmt_g(s.std_accuracy) << " over " << s.trials << " trial(s)\n";
    return 0;
}

// ---- sweep ----

struct SweepArgs {
    PoolArgs pool;
    SelectionArgs selection;
    std::vector<std::string> denoise_axis;
    std::vector<std::string> criterion_axis;
    std::vector<std::string> process_axis;
    std::vector<std::string> op_axis;
    std::vector<std::size_t> cores_axis;
    std::vector<double> removal_axis;
    std::vector<double> delta_axis;
    std::size_t trials = 1;
    std::string out_dir = ".";
};

struct SweepCell {
    SelectionConfig config;
    std::string denoise, criterion, process, op;
};

int cmd_sweep(const SweepArgs& args) {
    const FeaturePool pool = load_pool_args(args.pool);
    const SelectionConfig base = args.selection.resolve();
    std::filesystem::create_directories(args.out_dir);

    auto denoises = args.denoise_axis.empty() ? std::vector<std::string>{args.selection.denoise}
                                              : args.denoise_axis;
    auto criteria = args.criterion_axis.empty()
                        ? std::vector<std::string>{args.selection.criterion}
                        : args.criterion_axis;
    auto processes = args.process_axis.empty() ? std::vector<std::string>{args.selection.process}
                                               : args.process_axis;
    auto ops = args.op_axis.empty() ? std::vector<std::string>{args.selection.opponent_penalty}
                                    : args.op_axis;
    auto cores = args.cores_axis.empty() ? std::vector<std::size_t>{base.core_count}
                                         : args.cores_axis;
    auto removals = args.removal_axis.empty() ? std::vector<double>{base.removal_ratio}
                                              : args.removal_axis;
    auto deltas = args.delta_axis.empty() ? std::vector<double>{base.opponent_delta}
                                          : args.delta_axis;

    std::vector<SweepCell> cells;
    for (const auto& dn : denoises)
        for (const auto& cr : criteria)
            for (const auto& pr : processes)
                for (const auto& op : ops)
                    for (std::size_t k : cores)
                        for (double rm : removals)
                            for (double dl : deltas) {
                                SweepCell cell;
                                cell.config = base;
                                cell.config.denoise = parse_denoise(dn);
                                cell.config.criterion = parse_criterion(cr);
                                cell.config.process = parse_process(pr);
                                cell.config.use_opponent_penalty = op == "on";
                                cell.config.core_count = k;
                                cell.config.removal_ratio = rm;
                                cell.config.opponent_delta = dl;
                                cell.denoise = dn;
                                cell.criterion = cr;
                                cell.process = pr;
                                cell.op = op;
                                cells.push_back(std::move(cell));
                            }

    struct CellResult {
        double mean_acc = 0.0, std_acc = 0.0, mean_cov = 0.0, mean_margin = 0.0;
    };
    auto run_cell = [&](const SweepCell& cell) {
        CellResult r;
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t t = 0; t < args.trials; ++t) {
            const auto indices =
                run_method("bilaf", pool, cell.config, trial_seed(base.seed, "bilaf", t));
            const EvalReport report = evaluate_selection(pool, indices);
            sum += report.top1_accuracy;
            sum_sq += report.top1_accuracy * report.top1_accuracy;
            r.mean_cov += report.class_coverage;
            r.mean_margin += report.mean_boundary_margin;
        }
        const double n = static_cast<double>(args.trials);
        r.mean_acc = sum / n;
        r.mean_cov /= n;
        r.mean_margin /= n;
        if (args.trials > 1)
            r.std_acc = std::sqrt(std::max(0.0, (sum_sq - n * r.mean_acc * r.mean_acc) / (n - 1)));
        return r;
    };

    // cells are independent; run them in a small work pool, then emit rows
    // in cross-product order
    std::vector<CellResult> results(cells.size());
    const std::size_t workers =
        std::min<std::size_t>(cells.size(),
                              std::max(1u, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> futures;
    for (std::size_t w = 0; w < workers; ++w)
        futures.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
                results[i] = run_cell(cells[i]);
        }));
    for (auto& f : futures) f.get();

    ConfigEcho echo = echo_selection_config(base);
    echo.insert(echo.begin(), {"pool", args.pool.path});
    echo.emplace_back("trials", std::to_string(args.trials));
    std::ostringstream csv;
    csv << header_block("sweep", echo);
    csv << "denoise,criterion,process,opponent_penalty,cores,removal_ratio,delta,"
           "trials,mean_accuracy,std_accuracy,mean_coverage,mean_margin\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const auto& r = results[i];
        csv << c.denoise << ',' << c.criterion << ',' << c.process << ',' << c.op << ','
            << c.config.core_count << ',' << fmt_g(c.config.removal_ratio) << ','
            << fmt_g(c.config.opponent_delta) << ',' << args.trials << ',' << fmt_g(r.mean_acc)
            << ',' << fmt_g(r.std_acc) << ',' << fmt_g(r.mean_cov) << ',' << fmt_g(r.mean_margin)
            << "\n";
    }
    write_lines(std::filesystem::path(args.out_dir) / "sweep.csv", csv.str());
    std::cout << "swept " << cells.size() << " cell(s) x " << args.trials << " trial(s)\n";
    return 0;
}

// ---- export-viz ----

struct VizArgs {
    PoolArgs pool;
    std::string selection_file;
    std::string out;
};

int cmd_export_viz(const VizArgs& args) {
    const FeaturePool pool = load_pool_args(args.pool);
    const Pca2 pca = pca2(pool);

    std::vector<std::string> stage(pool.n, "none");
    if (!args.selection_file.empty()) {
        const std::filesystem::path sel_path(args.selection_file);
        if (sel_path.extension() == ".json") {
            std::ifstream in(sel_path);
            if (!in) throw io_error("cannot open selection file: " + sel_path.string());
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw format_error(sel_path.string() + ": " + e.what());
            }
            for (const auto& rec : j.at("selected")) {
                const std::size_t idx = rec.at("index").get<std::size_t>();
                if (idx >= pool.n)
                    throw format_error(sel_path.string() + ": index " + std::to_string(idx) +
                                       " out of range");
                stage[idx] = rec.at("stage").get<std::string>();
            }
        } else {
            for (std::size_t idx : read_indices_txt(sel_path)) {
                if (idx >= pool.n)
                    throw format_error(sel_path.string() + ": index " + std::to_string(idx) +
                                       " out of range");
                stage[idx] = "selected";
            }
        }
    }

    ConfigEcho echo{{"pool", args.pool.path},
                    {"selection", args.selection_file.empty() ? "-" : args.selection_file},
                    {"pc1_variance", fmt_g(pca.variances[0])},
                    {"pc2_variance", fmt_g(pca.variances[1])}};
    std::ostringstream csv;
    csv << header_block("export-viz", echo);
    csv << "x,y,label,selected_stage\n";
    for (std::size_t i = 0; i < pool.n; ++i) {
        const auto [x, y] = pca2_project(pca, pool, i);
        csv << fmt_g(x) << ',' << fmt_g(y) << ','
            << (pool.has_labels() ? std::to_string(pool.labels[i]) : std::string("-1")) << ','
            << stage[i] << "\n";
    }
    write_lines(args.out, csv.str());
    std::cout << "wrote projection of " << pool.n << " samples to " << args.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"BiLAF: bi-level sample selection for active finetuning"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "generate a synthetic mixture pool");
    generate->set_config("--config");
    generate->add_option("--out", gen.out, "output pool file")->required();
    generate->add_option("--classes", gen.spec.num_classes, "number of classes")
        ->capture_default_str();
    generate->add_option("--per-class", gen.spec.samples_per_class, "samples per class")
        ->capture_default_str();
    generate->add_option("--dim", gen.spec.dim, "feature dimension")->capture_default_str();
    generate->add_option("--separation", gen.spec.center_separation,
                         "minimum pairwise center distance")
        ->capture_default_str();
    generate->add_option("--intra-std", gen.spec.intra_std, "within-class standard deviation")
        ->capture_default_str();
    generate->add_option("--noise-fraction", gen.spec.noise_fraction,
                         "fraction drawn at 3x intra-std")
        ->capture_default_str();
    generate->add_option("--seed", gen.spec.seed, "generator seed")->capture_default_str();

    SelectArgs sel;
    CLI::App* select = app.add_subcommand("select", "run a selection method over a pool");
    select->set_config("--config");
    add_pool_flags(select, sel.pool);
    select->add_option("--method", sel.method, "selection method (bilaf, random, fds, kmeans)")
        ->check(CLI::IsMember({"bilaf", "random", "fds", "kmeans"}))
        ->capture_default_str();
    add_selection_flags(select, sel.selection);
    select->add_option("--out-dir", sel.out_dir, "output directory")->capture_default_str();

    EvaluateArgs eval;
    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate selections on a labeled pool");
    evaluate->set_config("--config");
    add_pool_flags(evaluate, eval.pool);
    evaluate->add_option("--selection", eval.selection_file,
                         "evaluate this index file instead of running methods");
    evaluate->add_option("--methods", eval.methods,
                         "methods to compare (default: bilaf random fds kmeans)")
        ->delimiter(',');
    evaluate->add_option("--trials", eval.trials, "trials per method")->capture_default_str();
    add_selection_flags(evaluate, eval.selection);
    evaluate->add_option("--out-dir", eval.out_dir, "output directory")->capture_default_str();

    SweepArgs sweep;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run an ablation grid");
    sweep_cmd->set_config("--config");
    add_pool_flags(sweep_cmd, sweep.pool);
    add_selection_flags(sweep_cmd, sweep.selection);
    sweep_cmd->add_option("--sweep-denoise", sweep.denoise_axis, "denoise axis values")
        ->delimiter(',');
    sweep_cmd->add_option("--sweep-criterion", sweep.criterion_axis, "criterion axis values")
        ->delimiter(',');
    sweep_cmd->add_option("--sweep-process", sweep.process_axis, "process axis values")
        ->delimiter(',');
    sweep_cmd->add_option("--sweep-op", sweep.op_axis, "opponent penalty axis values (on/off)")
        ->delimiter(',');
    sweep_cmd->add_option("--sweep-cores", sweep.cores_axis, "core count axis values")
        ->delimiter(',');
    sweep_cmd->add_option("--sweep-removal", sweep.removal_axis, "removal ratio axis values")
        ->delimiter(',');
    sweep_cmd->add_option("--sweep-delta", sweep.delta_axis, "delta axis values")->delimiter(',');
    sweep_cmd->add_option("--trials", sweep.trials, "trials per cell")->capture_default_str();
    sweep_cmd->add_option("--out-dir", sweep.out_dir, "output directory")->capture_default_str();

    VizArgs viz;
    CLI::App* export_viz = app.add_subcommand("export-viz", "export a 2-D PCA projection");
    export_viz->set_config("--config");
    add_pool_flags(export_viz, viz.pool);
    export_viz->add_option("--selection", viz.selection_file,
                           "selection file (json or txt) used to tag samples");
    export_viz->add_option("--out", viz.out, "output csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (app.got_subcommand(generate)) return cmd_generate(gen);
        if (app.got_subcommand(select)) return cmd_select(sel);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(eval);
        if (app.got_subcommand(sweep_cmd)) return cmd_sweep(sweep);
        if (app.got_subcommand(export_viz)) return cmd_export_viz(viz);
        std::cerr << "error: no subcommand given\n";
        return 1;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
