// SPDX-License-Identifier: Apache-2.0
//
// stcm - semantics-conditioned ISAC channel simulator
// Copyright (C) 2026 The stcm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// stcm command-line tool. Exit codes: 0 success, 1 usage error, 2 runtime
// error.

#include "stcm/stcm.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

struct Globals
{
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string log_level;
    std::vector<std::string> sets;
    std::map<std::string, double> clutter;
};

stcm::RunConfig merged_config(const Globals &g)
{
    stcm::ConfigMap file;
    if (!g.config_file.empty())
        file = stcm::read_ini_file(g.config_file);
    stcm::ConfigMap flags;
    for (const auto &kv : g.sets)
    {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
        flags[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    for (const auto &[field, value] : g.clutter)
    {
        std::ostringstream os;
        os.precision(17);
        os << value;
        flags["clutter." + field] = os.str();
    }
    if (g.seed)
        flags["run.seed"] = std::to_string(*g.seed);
    if (g.threads)
        flags["run.threads"] = std::to_string(*g.threads);
    if (!g.log_level.empty())
        flags["run.log_level"] = g.log_level;
    return stcm::RunConfig::merge(file, flags);
}

std::ofstream open_out(const fs::path &path, bool binary = false)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os)
        throw stcm::FormatError("cannot write " + path.string());
    return os;
}

std::ifstream open_in(const fs::path &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw stcm::FormatError("cannot open " + path.string());
    return is;
}

void write_manifest(const stcm::RunConfig &rc, const std::string &command, std::vector<fs::path> inputs,
                    std::vector<fs::path> outputs, const fs::path &where)
{
    stcm::Manifest m;
    m.command = command;
    m.config_hash = rc.hash();
    m.seed = rc.seed();
    m.threads = rc.threads();
    m.config = rc.values();
    m.inputs = std::move(inputs);
    m.outputs = std::move(outputs);
    m.write(where);
    spdlog::info("wrote {}", where.string());
}

fs::path manifest_for(const fs::path &out) { return fs::path(out.string() + ".manifest.json"); }

stcm::SemanticScene load_scene(const fs::path &path)
{
    auto r = stcm::validate_scene_with_warnings(stcm::read_file(path));
    for (const auto &w : r.warnings)
        spdlog::warn("{}: {}", path.string(), w);
    return std::move(r.scene);
}

stcm::ProtocolConfig protocol_config(const stcm::RunConfig &rc)
{
    stcm::ProtocolConfig p;
    p.n_views = static_cast<std::size_t>(rc.get("protocol.n_views", static_cast<int>(p.n_views)));
    p.library_seed =
        static_cast<std::uint64_t>(rc.get("synthesizer.library_seed", static_cast<int>(p.library_seed)));
    p.seed = rc.seed();
    p.range = rc.get("protocol.range", p.range);
    p.f_c = rc.get("protocol.f_c", p.f_c);
    p.bandwidth = rc.get("protocol.bandwidth", p.bandwidth);
    p.n_subcarriers = rc.get("protocol.n_subcarriers", p.n_subcarriers);
    p.rx_elements = rc.get("protocol.rx_elements", p.rx_elements);
    p.rx_spacing = rc.get("protocol.rx_spacing", p.rx_spacing);
    p.snr_db = rc.get("protocol.snr_db", p.snr_db);
    p.k_extract = static_cast<std::size_t>(rc.get("protocol.k_extract", static_cast<int>(p.k_extract)));
    p.n_instances = static_cast<std::size_t>(rc.get("protocol.n_instances", static_cast<int>(p.n_instances)));
    p.n_stations = static_cast<std::size_t>(rc.get("protocol.n_stations", static_cast<int>(p.n_stations)));
    p.exceedance_q = rc.get("protocol.exceedance_q", p.exceedance_q);
    p.generator = rc.generator_options();
    p.threads = rc.threads();
    return p;
}

void write_values_csv(const fs::path &path, const std::string &header, const std::vector<double> &values)
{
    auto os = open_out(path);
    os << "index," << header << '\n';
    os.precision(17);
    for (std::size_t i = 0; i < values.size(); ++i)
        os << i << ',' << values[i] << '\n';
}

// ---- Subcommands ----------------------------------------------------------

int cmd_validate(const Globals &g, const std::string &file, bool lenient)
{
    (void)merged_config(g);
    auto r = stcm::validate_scene_with_warnings(stcm::read_file(file), {lenient});
    for (const auto &w : r.warnings)
        spdlog::warn("{}: {}", file, w);
    std::cout << "valid: " << r.scene.scene_id << " (" << r.scene.targets.size() << " targets, "
              << r.scene.background.size() << " background, " << r.scene.relations.size() << " relations, "
              << r.scene.events.size() << " events)\n";
    return 0;
}

int cmd_parse(const Globals &g, const fs::path &input, const std::string &endpoint, const std::string &model,
              const fs::path &out)
{
    stcm::RunConfig rc = merged_config(g);
    if (!endpoint.empty())
        rc.set("llm_parser.base_url", endpoint);
    if (!model.empty())
        rc.set("llm_parser.model", model);
    const stcm::LlmEndpointConfig cfg = rc.llm_config();
    auto outcome = stcm::parse_text(stcm::read_file(input), cfg, [](std::string_view msg) {
        spdlog::debug("{}", msg);
    });
    for (const auto &w : outcome.warnings)
        spdlog::warn("{}", w);
    spdlog::info("parsed scene '{}' after {} retries", outcome.scene.scene_id, outcome.retries);
    open_out(out) << stcm::serialize_scene(outcome.scene) << '\n';
    write_manifest(rc, "parse", {input}, {out}, manifest_for(out));
    return 0;
}

int cmd_synth_library(const Globals &g, const std::string &cls, int views, double range, const fs::path &out,
                      const fs::path &pairs_out)
{
    const stcm::RunConfig rc = merged_config(g);
    stcm::ProtocolConfig pc = protocol_config(rc);
    if (views > 0)
        pc.n_views = static_cast<std::size_t>(views);
    if (range > 0.0)
        pc.range = range;
    if (pc.n_views < 1)
        throw stcm::SchemaError("dataset: --views must be >= 1");
    std::optional<stcm::TargetClass> only;
    if (cls != "all")
        only = stcm::parse_target_class(cls);
    const stcm::Protocol proto(pc);
    auto lib = open_out(out);
    std::optional<std::ofstream> pairs;
    if (!pairs_out.empty())
        pairs.emplace(open_out(pairs_out));
    std::size_t written = 0;
    for (std::size_t i = 0; i < proto.size(); ++i)
    {
        if (only && proto.class_of(i) != *only)
            continue;
        const auto model = stcm::build_class_model(proto.class_of(i), pc.library_seed);
        const auto parts = stcm::class_parts(proto.class_of(i), model.part_rates);
        lib << stcm::to_json(proto.library()[i], parts).dump() << '\n';
        if (pairs)
            *pairs << stcm::pair_to_line(proto.pairs()[i]) << '\n';
        ++written;
    }
    spdlog::info("wrote {} library entries", written);
    std::vector<fs::path> outs{out};
    if (!pairs_out.empty())
        outs.push_back(pairs_out);
    lib.close();
    if (pairs)
        pairs->close();
    write_manifest(rc, "dataset synth-library", {}, outs, manifest_for(out));
    return 0;
}

int cmd_fit(const Globals &g, const fs::path &pairs_path, bool baseline, const fs::path &out)
{
    const stcm::RunConfig rc = merged_config(g);
    auto is = open_in(pairs_path);
    const auto pairs = stcm::read_pairs(is);
    const stcm::GeneratorModel m = baseline ? stcm::fit_baseline(pairs) : stcm::fit(pairs, rc.generator_options());
    {
        auto os = open_out(out);
        stcm::save_model(os, m);
    }
    spdlog::info("fitted {} model on {} pairs", baseline ? "baseline" : "knn", pairs.size());
    write_manifest(rc, baseline ? "fit --baseline" : "fit", {pairs_path}, {out}, manifest_for(out));
    return 0;
}

int cmd_generate(const Globals &g, const fs::path &scene_path, const fs::path &model_path, std::size_t n,
                 const fs::path &out)
{
    const stcm::RunConfig rc = merged_config(g);
    const stcm::SemanticScene scene = load_scene(scene_path);
    auto is = open_in(model_path);
    const stcm::GeneratorModel m = stcm::load_model(is);
    const auto thetas = stcm::generate(m, stcm::encode_scene(scene), rc.seed(), n);
    {
        auto os = open_out(out);
        for (const auto &t : thetas)
            os << stcm::theta_to_line(t) << '\n';
    }
    write_manifest(rc, "generate", {scene_path, model_path}, {out}, manifest_for(out));
    return 0;
}

int cmd_synth(const Globals &g, const fs::path &scene_path, const fs::path &theta_path, std::size_t theta_index,
              const fs::path &out, const fs::path &paths_csv)
{
    const stcm::RunConfig rc = merged_config(g);
    const stcm::SemanticScene scene = load_scene(scene_path);
    const stcm::SimConfig cfg = rc.sim_config();
    const stcm::ClutterTable table = rc.clutter_table();
    std::optional<stcm::ParameterVector> theta;
    std::vector<fs::path> inputs{scene_path};
    if (!theta_path.empty())
    {
        auto is = open_in(theta_path);
        std::string line;
        std::size_t i = 0;
        while (std::getline(is, line))
        {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            if (i++ == theta_index)
            {
                theta = stcm::theta_from_line(line);
                break;
            }
        }
        if (!theta)
            throw stcm::FormatError("theta file has no line " + std::to_string(theta_index));
        inputs.push_back(theta_path);
    }
    if (!g.config_file.empty())
        inputs.emplace_back(g.config_file);
    const auto snaps = stcm::simulate(scene, theta, cfg, rc.threads(), &table);
    {
        auto os = open_out(out, true);
        stcm::write_snapshots(os, snaps);
    }
    std::vector<fs::path> outs{out};
    if (!paths_csv.empty())
    {
        auto os = open_out(paths_csv);
        stcm::write_paths_csv(os, snaps);
        outs.push_back(paths_csv);
    }
    spdlog::info("rendered {} snapshots ({} paths in the first)", snaps.size(), snaps.front().paths.size());
    write_manifest(rc, "synth", inputs, outs, manifest_for(out));
    return 0;
}

int cmd_eval_tms(const Globals &g, const fs::path &channel, const fs::path &scene_path, const fs::path &library_path,
                 std::size_t k_extract, const fs::path &out)
{
    const stcm::RunConfig rc = merged_config(g);
    const stcm::SimConfig cfg = rc.sim_config();
    const stcm::SemanticScene scene = load_scene(scene_path);
    if (scene.targets.empty())
        throw stcm::SchemaError("eval tms: the scene has no target to observe");
    auto cis = open_in(channel);
    const stcm::SnapshotFile file = stcm::read_snapshots(cis);
    if (file.config_hash != cfg.hash())
        spdlog::warn("channel config hash differs from the current configuration");
    auto lis = open_in(library_path);
    std::vector<stcm::McsSet> library;
    for (auto &rec : stcm::read_library(lis))
        library.push_back(std::move(rec.set));
    if (library.empty())
        throw stcm::EmptyLibrary("eval tms: empty library");
    const stcm::TargetSpec &t = scene.targets.front();
    std::vector<double> scores;
    auto os = open_out(out);
    os << "snapshot,time,best_index,best_class,tms\n";
    os.precision(17);
    for (std::size_t i = 0; i < file.cfrs.size(); ++i)
    {
        const double time = file.times[i];
        const stcm::Vec3 pos = t.position + t.velocity * time;
        const stcm::ObservationGeometry geo{cfg, pos, t.heading, time};
        const double path_len = (pos - cfg.tx).norm() + (pos - cfg.rx).norm();
        const stcm::ExtractionOptions opt{std::max(0.0, (path_len - 12.0) / stcm::kSpeedOfLight), 1e-12};
        const auto est = stcm::extract_centers(file.cfrs[i], cfg, k_extract, opt);
        const auto id = stcm::identify(est, library, geo);
        scores.push_back(id.score);
        os << i << ',' << time << ',' << id.index << ',' << stcm::to_string(id.cls) << ',' << id.score << '\n';
    }
    os.close();
    const fs::path ccdf_path = fs::path(out.string() + ".ccdf.csv");
    {
        auto cs = open_out(ccdf_path);
        stcm::write_ccdf_csv(cs, stcm::ccdf(scores));
    }
    write_manifest(rc, "eval tms", {channel, scene_path, library_path}, {out, ccdf_path}, manifest_for(out));
    return 0;
}

int cmd_eval_fidelity(const Globals &g, const fs::path &model_path, const fs::path &baseline_path,
                      const fs::path &pairs_path, const fs::path &scene_path, std::size_t n, std::size_t n_proj,
                      std::size_t reference_size, const fs::path &out)
{
    const stcm::RunConfig rc = merged_config(g);
    const stcm::SemanticScene scene = load_scene(scene_path);
    const stcm::SemanticCode code = stcm::encode_scene(scene);
    auto pis = open_in(pairs_path);
    const auto pairs = stcm::read_pairs(pis);
    if (pairs.empty())
        throw stcm::EmptySample("eval fidelity: no training pairs");
    // conditional reference: theta of the training codes nearest to s
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        dist.emplace_back(stcm::scene_distance(code, pairs[i].first), i);
    std::sort(dist.begin(), dist.end());
    stcm::SampleSet reference;
    for (std::size_t i = 0; i < std::min(reference_size, dist.size()); ++i)
        reference.push_back(pairs[dist[i].second].second.values);

    auto sample = [&](const fs::path &path) {
        auto is = open_in(path);
        const auto m = stcm::load_model(is);
        stcm::SampleSet s;
        for (auto &t : stcm::generate(m, code, rc.seed(), n))
            s.push_back(std::move(t.values));
        return s;
    };
    nlohmann::ordered_json report;
    std::vector<fs::path> inputs{model_path, pairs_path, scene_path};
    auto evaluate = [&](const std::string &name, const fs::path &path) {
        const stcm::SampleSet s = sample(path);
        stcm::FidelityReport r;
        r.n_projections = n_proj;
        r.projection_seed = rc.seed();
        r.sliced_wasserstein = stcm::sliced_wasserstein(s, reference, n_proj, 1.0, rc.seed());
        r.marginal_distances = stcm::marginal_wasserstein(s, reference);
        report[name] = r.to_json();
        spdlog::info("{}: sliced Wasserstein {:.6g}", name, r.sliced_wasserstein);
    };
    evaluate("model", model_path);
    if (!baseline_path.empty())
    {
        evaluate("baseline", baseline_path);
        inputs.push_back(baseline_path);
    }
    report["reference_size"] = reference.size();
    open_out(out) << report.dump(2) << '\n';
    write_manifest(rc, "eval fidelity", inputs, {out}, manifest_for(out));
    return 0;
}

int cmd_eval_collab(const Globals &g, const fs::path &out_dir)
{
    const stcm::RunConfig rc = merged_config(g);
    const stcm::Protocol proto(protocol_config(rc));
    const auto r = stcm::run_collaborative(proto);
    fs::create_directories(out_dir);
    write_values_csv(out_dir / "pvalues_generator.csv", "p", r.generator_p);
    write_values_csv(out_dir / "pvalues_baseline.csv", "p", r.baseline_p);
    nlohmann::ordered_json j;
    j["alpha"] = stcm::kSignificance;
    j["generator_fraction_above_alpha"] = r.generator_pass;
    j["baseline_median_p"] = r.baseline_median;
    open_out(out_dir / "collab.json") << j.dump(2) << '\n';
    std::cout << j.dump(2) << '\n';
    write_manifest(rc, "eval collab", {},
                   {out_dir / "pvalues_generator.csv", out_dir / "pvalues_baseline.csv", out_dir / "collab.json"},
                   out_dir / "manifest.json");
    return 0;
}

int cmd_report(const Globals &g, const fs::path &out_dir, bool skip_collab)
{
    const stcm::RunConfig rc = merged_config(g);
    const stcm::Protocol proto(protocol_config(rc));
    fs::create_directories(out_dir);
    std::vector<fs::path> outs;
    const auto id = stcm::run_identification(proto);
    for (const auto &[name, values] : {std::pair{"reference", &id.reference}, std::pair{"generator", &id.generator},
                                       std::pair{"baseline", &id.baseline}})
    {
        const fs::path p = out_dir / ("ccdf_" + std::string(name) + ".csv");
        auto os = open_out(p);
        stcm::write_ccdf_csv(os, stcm::ccdf(*values));
        outs.push_back(p);
    }
    nlohmann::ordered_json j;
    j["identification"] = {{"threshold", id.threshold},
                           {"reference_exceedance", id.reference_exceedance},
                           {"generator_exceedance", id.generator_exceedance},
                           {"baseline_exceedance", id.baseline_exceedance}};
    if (!skip_collab)
    {
        const auto c = stcm::run_collaborative(proto);
        write_values_csv(out_dir / "pvalues_generator.csv", "p", c.generator_p);
        write_values_csv(out_dir / "pvalues_baseline.csv", "p", c.baseline_p);
        outs.push_back(out_dir / "pvalues_generator.csv");
        outs.push_back(out_dir / "pvalues_baseline.csv");
        j["collaborative"] = {{"alpha", stcm::kSignificance},
                              {"generator_fraction_above_alpha", c.generator_pass},
                              {"baseline_median_p", c.baseline_median}};
    }
    open_out(out_dir / "report.json") << j.dump(2) << '\n';
    outs.push_back(out_dir / "report.json");
    std::cout << j.dump(2) << '\n';
    write_manifest(rc, "report", {}, outs, out_dir / "manifest.json");
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"stcm: semantics-conditioned ISAC channel simulator"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_file, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "master seed (run.seed)");
    app.add_option("--threads", g.threads, "worker threads (run.threads; env STCM_THREADS)")
        ->check(CLI::PositiveNumber);
    app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
    app.add_option("--set", g.sets, "override a config value: section.key=value");
    for (auto field : stcm::ClutterParams::field_names)
    {
        const std::string name(field);
        app.add_option_function<double>(
            "--clutter." + name, [&g, name](double v) { g.clutter[name] = v; },
            "override clutter " + name + " for every scenario");
    }
    app.fallthrough();

    std::string scene_file, out, input, endpoint, model, pairs_file, model_file, baseline_file, theta_file,
        channel_file, library_file, cls = "all", paths_csv;
    bool lenient = false, baseline = false, skip_collab = false;
    int views = 0;
    double range = 0.0;
    std::size_t n = 1, theta_index = 0, k_extract = 10, n_proj = 64, reference_size = 8;

    auto *validate = app.add_subcommand("validate", "validate a scene document");
    validate->add_option("file", scene_file, "scene document")->required()->check(CLI::ExistingFile);
    validate->add_flag("--lenient", lenient, "report unknown fields as warnings");

    auto *parse = app.add_subcommand("parse", "free text -> scene document through an LLM endpoint");
    parse->add_option("--input", input, "free-text description")->required()->check(CLI::ExistingFile);
    parse->add_option("--endpoint", endpoint, "OpenAI-compatible base URL (llm_parser.base_url)");
    parse->add_option("--model", model, "model name (llm_parser.model)");
    parse->add_option("--out", out, "scene document to write")->required();

    auto *dataset = app.add_subcommand("dataset", "dataset tools");
    dataset->require_subcommand(1);
    auto *synth_lib = dataset->add_subcommand("synth-library", "synthetic MSC library and training pairs");
    synth_lib->add_option("--class", cls, "vehicle, uav or all")->check(CLI::IsMember({"vehicle", "uav", "all"}));
    synth_lib->add_option("--views", views, "views per class (protocol.n_views)");
    synth_lib->add_option("--range", range, "target range for the training scenes, m (protocol.range)");
    synth_lib->add_option("--out", out, "library JSON lines")->required();
    synth_lib->add_option("--pairs", pairs_file, "training pairs JSON lines");

    auto *fit = app.add_subcommand("fit", "fit a generator on training pairs");
    fit->add_option("--pairs", pairs_file, "training pairs")->required()->check(CLI::ExistingFile);
    fit->add_flag("--baseline", baseline, "fit the coarse-statistics baseline instead");
    fit->add_option("--out", out, "model file")->required();

    auto *gen = app.add_subcommand("generate", "sample theta for a scene");
    gen->add_option("--scene", scene_file, "scene document")->required()->check(CLI::ExistingFile);
    gen->add_option("--model", model_file, "model file")->required()->check(CLI::ExistingFile);
    gen->add_option("--n", n, "ensemble size");
    gen->add_option("--out", out, "theta JSON lines")->required();

    auto *synth = app.add_subcommand("synth", "render channel snapshots");
    synth->add_option("--scene", scene_file, "scene document")->required()->check(CLI::ExistingFile);
    synth->add_option("--theta", theta_file, "theta JSON lines (default: fresh theta from the scene)")
        ->check(CLI::ExistingFile);
    synth->add_option("--theta-index", theta_index, "line of the theta file to use");
    synth->add_option("--out", out, "snapshot file")->required();
    synth->add_option("--paths", paths_csv, "path table CSV");

    auto *eval = app.add_subcommand("eval", "evaluation");
    eval->require_subcommand(1);
    auto *eval_tms = eval->add_subcommand("tms", "extract, identify and score channel snapshots");
    eval_tms->add_option("--channel", channel_file, "snapshot file")->required()->check(CLI::ExistingFile);
    eval_tms->add_option("--scene", scene_file, "scene of the channel")->required()->check(CLI::ExistingFile);
    eval_tms->add_option("--library", library_file, "library JSON lines")->required()->check(CLI::ExistingFile);
    eval_tms->add_option("--k-extract", k_extract, "centers to extract");
    eval_tms->add_option("--out", out, "per-snapshot TMS CSV")->required();

    auto *eval_fid = eval->add_subcommand("fidelity", "sliced Wasserstein fidelity of generated theta");
    eval_fid->add_option("--model", model_file, "model file")->required()->check(CLI::ExistingFile);
    eval_fid->add_option("--baseline", baseline_file, "second model to compare")->check(CLI::ExistingFile);
    eval_fid->add_option("--pairs", pairs_file, "training pairs")->required()->check(CLI::ExistingFile);
    eval_fid->add_option("--scene", scene_file, "conditioning scene")->required()->check(CLI::ExistingFile);
    eval_fid->add_option("--n", n, "samples per model")->default_val(200);
    eval_fid->add_option("--n-proj", n_proj, "projections");
    eval_fid->add_option("--reference-size", reference_size, "nearest training theta forming the reference");
    eval_fid->add_option("--out", out, "report JSON")->required();

    auto *eval_collab = eval->add_subcommand("collab", "multi-station K-S consistency benchmark");
    eval_collab->add_option("--out-dir", out, "output directory")->required();

    auto *report = app.add_subcommand("report", "full identification benchmark with CCDF and p-value curves");
    report->add_option("--out-dir", out, "output directory")->required();
    report->add_flag("--skip-collab", skip_collab, "single-observation benchmark only");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        std::cerr << app.help();
        return 1;
    }

    auto logger = spdlog::stderr_color_mt("stcm");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    try
    {
        const stcm::RunConfig rc = merged_config(g);
        spdlog::set_level(spdlog::level::from_str(rc.log_level()));

        if (*validate)
            return cmd_validate(g, scene_file, lenient);
        if (*parse)
            return cmd_parse(g, input, endpoint, model, out);
        if (*synth_lib)
            return cmd_synth_library(g, cls, views, range, out, pairs_file);
        if (*fit)
            return cmd_fit(g, pairs_file, baseline, out);
        if (*gen)
            return cmd_generate(g, scene_file, model_file, n, out);
        if (*synth)
            return cmd_synth(g, scene_file, theta_file, theta_index, out, paths_csv);
        if (*eval_tms)
            return cmd_eval_tms(g, channel_file, scene_file, library_file, k_extract, out);
        if (*eval_fid)
            return cmd_eval_fidelity(g, model_file, baseline_file, pairs_file, scene_file, n, n_proj,
                                     reference_size, out);
        if (*eval_collab)
            return cmd_eval_collab(g, out);
        if (*report)
            return cmd_report(g, out, skip_collab);
    }
    catch (const CLI::ValidationError &e)
    {
        std::cerr << e.what() << '\n';
        return 1;
    }
    catch (const stcm::Error &e)
    {
        spdlog::error("{}: {}", e.kind(), e.what());
        return 2;
    }
    catch (const std::exception &e)
    {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 1;
}
