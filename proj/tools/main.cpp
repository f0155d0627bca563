// wdkg: synth -> train -> eval -> select -> report pipeline driver.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wdkg/config.hpp"
#include "wdkg/errors.hpp"
#include "wdkg/feature_select.hpp"
#include "wdkg/graph.hpp"
#include "wdkg/io.hpp"
#include "wdkg/linkpred.hpp"
#include "wdkg/stream.hpp"
#include "wdkg/synth.hpp"

#include "svg.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace wdkg;

namespace {

RunConfig load_run_config(const std::string& config_path, const std::string& seed_flag) {
    RunConfig rc = config_path.empty() ? RunConfig() : RunConfig::from_file(config_path);
    rc.apply_env_seed();
    if (!seed_flag.empty()) rc.set("run.seed", seed_flag);
    return rc;
}

ordered_json metrics_json(const linkpred::MetricsReport& r) {
    ordered_json j;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["auc"] = r.auc;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["tn"] = r.tn;
    j["fn"] = r.fn;
    return j;
}

ordered_json paper_reference_block() {
    // Published test-set rows, reproduced for side-by-side reading only;
    // the synthetic benchmark is not the data these numbers came from.
    ordered_json ref;
    ref["note"] = "published reference results, not produced by this run";
    ref["STREAM"] = {{"accuracy", 0.960}, {"precision", 0.880}, {"recall", 0.880},
                     {"auc", 0.928},      {"f1", 0.880}};
    ref["STREAM-homo"] = {{"accuracy", 0.947}, {"precision", 0.840}, {"recall", 0.840},
                          {"auc", 0.904},      {"f1", 0.840}};
    return ref;
}

std::vector<Matrix> model_similarities(const WirelessKG& kg, const linkpred::MaskedView& view,
                                       stream::LoadedModel& model) {
    const auto embeddings = stream::slice_embeddings(kg, &view, model.config, model.params);
    std::vector<Matrix> sims;
    sims.reserve(embeddings.size());
    for (const auto& z : embeddings) sims.push_back(linkpred::cosine_matrix(z).c);
    return sims;
}

std::vector<Matrix> baseline_similarities(const WirelessKG& kg) {
    std::vector<Matrix> sims;
    for (const auto& s : kg.slices) sims.push_back(linkpred::cosine_matrix(s.data).c);
    return sims;
}

int resolve_kpi(const WirelessKG& kg, const fs::path& kg_dir, std::string name) {
    if (name.empty()) {
        // fall back to the generator's ground-truth KPI when present
        const fs::path truth = kg_dir / "truth.json";
        if (fs::exists(truth)) {
            const auto j = ordered_json::parse(io::read_file(truth));
            if (j.contains("kpi_node_name")) name = j.at("kpi_node_name").get<std::string>();
        }
    }
    if (name.empty())
        throw ConfigInvalid("select.kpi: no KPI name given and no truth.json to infer one from");
    const int id = kg.node_by_name(name);
    if (id < 0) throw ConfigInvalid("select.kpi: no node named \"" + name + "\"");
    return id;
}

// --- commands ---------------------------------------------------------------

void cmd_synth(const RunConfig& rc, const fs::path& out) {
    const auto cfg = rc.synth_config();
    const auto result = synth::generate(cfg);
    save_kg(result.kg, out);

    ordered_json truth;
    truth["base_edges"] = ordered_json::array();
    for (const auto& e : result.truth.base_edges)
        truth["base_edges"].push_back(ordered_json::array({e.src, e.dst, to_string(e.rel)}));
    truth["kpi_node"] = result.truth.kpi_node;
    truth["kpi_node_name"] = result.kg.nodes[static_cast<std::size_t>(result.truth.kpi_node)].name;
    truth["kpi_parents"] = result.truth.kpi_parents;
    ordered_json parent_names = ordered_json::array();
    for (int p : result.truth.kpi_parents)
        parent_names.push_back(result.kg.nodes[static_cast<std::size_t>(p)].name);
    truth["kpi_parent_names"] = parent_names;
    io::atomic_write(out / "truth.json", truth.dump(2) + "\n");
    std::printf("synth: %zu nodes, %zu slices -> %s\n", result.kg.nodes.size(),
                result.kg.slices.size(), out.string().c_str());
}

void cmd_train(const RunConfig& rc, const fs::path& kg_dir, const fs::path& out, bool homo) {
    const auto kg = load_kg(kg_dir);
    auto cfg = rc.stream_config();
    if (homo) cfg.heterogeneous = false;
    const double mask_ratio = rc.get_double("eval.mask_ratio");
    const auto view = linkpred::mask_edges(kg, mask_ratio, rc.seed());
    auto result = stream::train(kg, view, cfg, /*track_train_f1=*/true);
    stream::save_model(out, cfg, result.params, kg.node_count(), mask_ratio, rc.seed());

    std::string curves = "epoch,loss,train_f1\n";
    for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
        curves += std::to_string(e) + "," + io::format_double(result.loss_curve[e]) + "," +
                  io::format_double(result.train_f1_curve[e]) + "\n";
    }
    io::atomic_write(out / "curves.csv", curves);
    const std::string final_loss =
        result.loss_curve.empty() ? "n/a" : io::format_double(result.loss_curve.back());
    std::printf("train: %s, %d epochs, final loss %s -> %s\n",
                cfg.heterogeneous ? "STREAM" : "STREAM-homo", cfg.epochs, final_loss.c_str(),
                out.string().c_str());
}

void cmd_eval(const RunConfig& rc, const fs::path& kg_dir, const fs::path& model_dir,
              bool baseline, double mask_flag, int neg_flag, const std::string& seed_flag,
              const fs::path& out) {
    const auto kg = load_kg(kg_dir);

    double mask_ratio = rc.get_double("eval.mask_ratio");
    int neg_ratio = static_cast<int>(rc.get_int("eval.neg_ratio"));
    std::uint64_t seed = rc.seed();
    std::string model_name = "correlation-baseline";

    stream::LoadedModel model;
    if (!baseline) {
        if (model_dir.empty())
            throw ConfigInvalid("eval: --model is required (or pass --baseline)");
        model = stream::load_model(model_dir);
        // default to the protocol the checkpoint was trained under
        mask_ratio = model.mask_ratio;
        seed = model.mask_seed;
        model_name = model.config.heterogeneous ? "STREAM" : "STREAM-homo";
    }
    if (mask_flag >= 0.0) mask_ratio = mask_flag;
    if (neg_flag >= 0) neg_ratio = neg_flag;
    if (!seed_flag.empty()) seed = std::stoull(seed_flag);

    auto view = linkpred::mask_edges(kg, mask_ratio, seed);
    view = linkpred::sample_negatives(kg, view, neg_ratio, seed);
    const auto sims = baseline ? baseline_similarities(kg) : model_similarities(kg, view, model);
    const auto ev = linkpred::evaluate_slices(kg, view, sims);

    ordered_json report;
    report["model"] = model_name;
    report["mask_ratio"] = mask_ratio;
    report["neg_ratio"] = neg_ratio;
    report["seed"] = seed;
    report["aggregate"]["macro"] = metrics_json(ev.macro_mean);
    report["aggregate"]["micro"] = metrics_json(ev.micro);
    report["per_slice"] = ordered_json::array();
    for (std::size_t m = 0; m < ev.per_slice.size(); ++m) {
        auto j = metrics_json(ev.per_slice[m]);
        j["slice"] = m;
        report["per_slice"].push_back(j);
    }
    report["paper_reference"] = paper_reference_block();
    io::atomic_write(out, report.dump(2) + "\n");
    std::printf("eval: %s macro AUC %s, micro AUC %s -> %s\n", model_name.c_str(),
                io::format_double(ev.macro_mean.auc).c_str(),
                io::format_double(ev.micro.auc).c_str(), out.string().c_str());
}

void cmd_select(const RunConfig& rc, const fs::path& kg_dir, const fs::path& model_dir,
                const std::string& kpi_flag, double fit_flag, const fs::path& out) {
    const auto kg = load_kg(kg_dir);
    auto model = stream::load_model(model_dir);
    const int kpi = resolve_kpi(kg, kg_dir, kpi_flag.empty() ? rc.get_str("select.kpi") : kpi_flag);
    const double threshold = fit_flag >= 0.0 ? fit_flag : rc.get_double("select.fit_threshold");

    // Association inputs: embeddings over the full (unmasked) slices.
    const auto embeddings = stream::slice_embeddings(kg, nullptr, model.config, model.params);
    const std::size_t n = kg.node_count();
    Matrix c_mean(n, n);
    for (const auto& z : embeddings) {
        const Matrix c = linkpred::cosine_matrix(z).c;
        for (std::size_t i = 0; i < c.size(); ++i) c_mean.v[i] += c.v[i];
    }
    for (double& x : c_mean.v) x /= static_cast<double>(embeddings.size());
    const Matrix c_final = linkpred::cosine_matrix(embeddings.back()).c;

    const std::string c_source = rc.get_str("select.similarity_source");
    Matrix c_used(n, n);
    if (c_source == "mean") {
        c_used = c_mean;
    } else if (c_source == "final") {
        c_used = c_final;
    } else if (c_source == "final_mean") {
        for (std::size_t i = 0; i < c_used.size(); ++i)
            c_used.v[i] = 0.5 * (c_final.v[i] + c_mean.v[i]);
    } else {
        throw ConfigInvalid("select.similarity_source: expected mean|final|final_mean");
    }

    const std::string a_source = rc.get_str("select.adjacency_source");
    Matrix adj(n, n);
    if (a_source == "union") {
        for (const auto& s : kg.slices)
            for (const auto& e : s.edges) {
                adj(static_cast<std::size_t>(e.src), static_cast<std::size_t>(e.dst)) = 1.0;
                adj(static_cast<std::size_t>(e.dst), static_cast<std::size_t>(e.src)) = 1.0;
            }
    } else if (a_source == "final") {
        adj = adjacency_of(kg.slices.back(), n);
    } else {
        throw ConfigInvalid("select.adjacency_source: expected union|final");
    }

    const auto assoc = fsel::association_matrix(c_used, adj, c_source, a_source);
    const auto table = fsel::rank_features(assoc.omega, kpi);

    std::vector<std::string> names;
    for (const auto& node : kg.nodes) names.push_back(node.name);
    const Matrix telemetry = kg.full_telemetry();
    const auto spec = rc.regressor_spec();

    const auto t0 = std::chrono::steady_clock::now();
    auto dataset = fsel::greedy_select(table, telemetry, kpi, threshold, spec, names);
    const auto t1 = std::chrono::steady_clock::now();

    // Raw-dataset counterpart: every candidate feature at once.
    std::vector<std::vector<double>> all_cols;
    std::vector<double> kpi_series(telemetry.cols);
    for (std::size_t t = 0; t < telemetry.cols; ++t)
        kpi_series[t] = telemetry(static_cast<std::size_t>(kpi), t);
    for (const auto& row : table) {
        std::vector<double> col(telemetry.cols);
        for (std::size_t t = 0; t < telemetry.cols; ++t)
            col[t] = telemetry(static_cast<std::size_t>(row.node), t);
        all_cols.push_back(std::move(col));
    }
    const auto t2 = std::chrono::steady_clock::now();
    const double raw_fit = fsel::fit_regressor(all_cols, kpi_series, spec);
    const auto t3 = std::chrono::steady_clock::now();

    auto cost_raw = fsel::cost_report(spec, static_cast<int>(table.size()));
    cost_raw.wall_time_s = std::chrono::duration<double>(t3 - t2).count();
    auto cost_sel = fsel::cost_report(spec, static_cast<int>(dataset.nodes.size()));
    cost_sel.wall_time_s = std::chrono::duration<double>(t1 - t0).count();

    // ranking.csv: the full importance table
    std::string ranking = "rank,node,name,impact\n";
    for (std::size_t i = 0; i < table.size(); ++i)
        ranking += std::to_string(i + 1) + "," + std::to_string(table[i].node) + "," +
                   names[static_cast<std::size_t>(table[i].node)] + "," +
                   io::format_double(table[i].impact) + "\n";
    io::atomic_write(out / "ranking.csv", ranking);

    // features.csv: selected columns plus the KPI
    std::string features = "tick";
    for (const auto& nm : dataset.names) features += "," + nm;
    features += "," + names[static_cast<std::size_t>(kpi)] + "\n";
    for (std::size_t t = 0; t < telemetry.cols; ++t) {
        features += std::to_string(t);
        for (int node : dataset.nodes)
            features += "," + io::format_double(telemetry(static_cast<std::size_t>(node), t));
        features += "," + io::format_double(telemetry(static_cast<std::size_t>(kpi), t)) + "\n";
    }
    io::atomic_write(out / "features.csv", features);

    auto round2 = [](double x) { return std::round(x * 100.0) / 100.0; };
    ordered_json report;
    report["kpi"] = names[static_cast<std::size_t>(kpi)];
    report["fit_threshold"] = threshold;
    report["achieved_fit"] = dataset.achieved_fit;
    report["reached"] = dataset.reached;
    report["selected"] = dataset.names;
    report["n_candidates"] = table.size();
    report["compression_percent"] = round2(dataset.compression_percent);
    report["similarity_source"] = c_source;
    report["adjacency_source"] = a_source;
    report["cost"]["raw"] = {{"n_features", table.size()},
                             {"fit", raw_fit},
                             {"params", cost_raw.params},
                             {"flops", cost_raw.flops},
                             {"gflops", cost_raw.gflops},
                             {"wall_time_s", cost_raw.wall_time_s}};
    report["cost"]["selected"] = {{"n_features", dataset.nodes.size()},
                                  {"fit", dataset.achieved_fit},
                                  {"params", cost_sel.params},
                                  {"flops", cost_sel.flops},
                                  {"gflops", cost_sel.gflops},
                                  {"wall_time_s", cost_sel.wall_time_s}};
    io::atomic_write(out / "report.json", report.dump(2) + "\n");
    std::printf("select: %zu of %zu features, fit %s, compression %s%% -> %s\n",
                dataset.nodes.size(), table.size(),
                io::format_double(dataset.achieved_fit).c_str(),
                io::format_double(round2(dataset.compression_percent)).c_str(),
                out.string().c_str());
}

void cmd_report(const fs::path& run_dir, const fs::path& out) {
    const fs::path curves_in = run_dir / "model" / "curves.csv";
    const fs::path eval_in = run_dir / "eval.json";
    const fs::path ranking_in = run_dir / "features" / "ranking.csv";
    const fs::path select_in = run_dir / "features" / "report.json";
    for (const auto& p : {curves_in, eval_in, ranking_in, select_in})
        if (!fs::exists(p)) throw MissingArtifact("report: missing artifact " + p.string());

    const std::string curves = io::read_file(curves_in);
    std::istringstream lines(curves);
    std::string line;
    std::getline(lines, line); // header
    std::vector<double> loss, f1;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::istringstream cells(line);
        std::string cell;
        std::getline(cells, cell, ',');
        std::getline(cells, cell, ',');
        loss.push_back(std::stod(cell));
        std::getline(cells, cell, ',');
        f1.push_back(std::stod(cell));
    }
    io::atomic_write(out / "curves.csv", curves);
    io::atomic_write(out / "training_curve.svg",
                     svg::line_chart("training loss", "epoch", {{"loss", "#a83232", loss}}));
    io::atomic_write(out / "training_f1.svg",
                     svg::line_chart("training F1", "epoch", {{"F1", "#32a852", f1}}));

    std::istringstream rlines(io::read_file(ranking_in));
    std::getline(rlines, line); // header
    std::vector<std::string> labels;
    std::vector<double> impacts;
    while (std::getline(rlines, line)) {
        if (line.empty()) continue;
        std::istringstream cells(line);
        std::string rank, node, name, impact;
        std::getline(cells, rank, ',');
        std::getline(cells, node, ',');
        std::getline(cells, name, ',');
        std::getline(cells, impact, ',');
        labels.push_back(name);
        impacts.push_back(std::stod(impact));
    }
    io::atomic_write(out / "feature_ranking.svg",
                     svg::bar_chart("feature impact on the KPI", labels, impacts));

    ordered_json summary;
    summary["epochs"] = loss.size();
    summary["final_loss"] = loss.empty() ? 0.0 : loss.back();
    summary["final_train_f1"] = f1.empty() ? 0.0 : f1.back();
    summary["eval"] = ordered_json::parse(io::read_file(eval_in));
    summary["features"] = ordered_json::parse(io::read_file(select_in));
    summary["ranking_size"] = impacts.size();
    io::atomic_write(out / "summary.json", summary.dump(2) + "\n");
    std::printf("report: %zu epochs, %zu ranked features -> %s\n", loss.size(), impacts.size(),
                out.string().c_str());
}

std::string config_listing() {
    std::string out;
    for (const auto& [k, v] : RunConfig().items())
        out += "  " + k + " = " + (v.empty() ? "(unset)" : v) + "\n";
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wdkg: dynamic wireless-data knowledge graph pipeline"};
    app.require_subcommand(1);
    app.footer("config keys and defaults:\n" + config_listing() +
               "\nenvironment: WDKG_SEED overrides run.seed");

    std::string config_path, seed_flag;
    std::string kg_dir, model_dir, out_path, run_dir, kpi_name;
    bool homo = false, baseline = false, show_defaults = false;
    double mask_flag = -1.0, fit_flag = -1.0;
    int neg_flag = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key=value run configuration file");
        cmd->add_option("--seed", seed_flag, "override run.seed");
    };

    auto* c_synth = app.add_subcommand("synth", "generate the seeded synthetic benchmark");
    add_common(c_synth);
    c_synth->add_option("--out", out_path, "output directory")->required();

    auto* c_train = app.add_subcommand("train", "train the embedding model on masked slices");
    add_common(c_train);
    c_train->add_option("--kg", kg_dir, "KG directory (kg.json + telemetry.csv)")->required();
    c_train->add_option("--out", out_path, "model output directory")->required();
    c_train->add_flag("--homo", homo, "homogeneous ablation (ignore relation types)");

    auto* c_eval = app.add_subcommand("eval", "masked link-prediction evaluation");
    add_common(c_eval);
    c_eval->add_option("--kg", kg_dir, "KG directory")->required();
    c_eval->add_option("--model", model_dir, "trained model directory");
    c_eval->add_flag("--baseline", baseline, "score with raw telemetry similarity instead");
    c_eval->add_option("--mask", mask_flag, "masking proportion override");
    c_eval->add_option("--neg", neg_flag, "negatives per positive override");
    c_eval->add_option("--out", out_path, "report JSON path")->required();

    auto* c_select = app.add_subcommand("select", "distill the feature dataset for a KPI");
    add_common(c_select);
    c_select->add_option("--kg", kg_dir, "KG directory")->required();
    c_select->add_option("--model", model_dir, "trained model directory")->required();
    c_select->add_option("--kpi", kpi_name, "KPI node name (default: truth.json)");
    c_select->add_option("--fit", fit_flag, "fit threshold d");
    c_select->add_option("--out", out_path, "feature dataset output directory")->required();

    auto* c_report = app.add_subcommand("report", "consolidated summary and plots");
    c_report->add_option("--run", run_dir, "run directory (model/, eval.json, features/)")
        ->required();
    c_report->add_option("--out", out_path, "report output directory")->required();

    auto* c_config = app.add_subcommand("config", "show configuration keys");
    add_common(c_config);
    c_config->add_flag("--defaults", show_defaults, "print every key with its default");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_synth->parsed()) {
            cmd_synth(load_run_config(config_path, seed_flag), out_path);
        } else if (c_train->parsed()) {
            cmd_train(load_run_config(config_path, seed_flag), kg_dir, out_path, homo);
        } else if (c_eval->parsed()) {
            cmd_eval(load_run_config(config_path, seed_flag), kg_dir, model_dir, baseline,
                     mask_flag, neg_flag, seed_flag, out_path);
        } else if (c_select->parsed()) {
            cmd_select(load_run_config(config_path, seed_flag), kg_dir, model_dir, kpi_name,
                       fit_flag, out_path);
        } else if (c_report->parsed()) {
            cmd_report(run_dir, out_path);
        } else if (c_config->parsed()) {
            const RunConfig rc = load_run_config(config_path, seed_flag);
            (void)show_defaults; // the listing always covers every key
            for (const auto& [k, v] : rc.items())
                std::printf("%s = %s\n", k.c_str(), v.c_str());
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 2;
    }
    return 0;
}
