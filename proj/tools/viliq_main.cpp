// viliq: simulate | calibrate | estimate | sweep | identify
//
// The simulator stands in for the phone hardware; every command is
// deterministic under --seed and stamps its outputs with the pipeline
// config hash.

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "viliq/io.hpp"
#include "viliq/scene.hpp"

namespace {

using viliq::json;

int thread_cap() {
    if (const char* env = std::getenv("VILIQ_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

viliq::PipelineConfig load_config(const std::string& path, std::uint64_t seed) {
    viliq::PipelineConfig cfg;
    if (!path.empty()) cfg = viliq::pipeline_config_from_json(viliq::read_json(path));
    cfg.seed = seed;
    return cfg;
}

struct SweepCell {
    double eta_cp;
    double volume_ml;
    double noise_frac;
    double jitter_std_s;
    std::string ablation;
};

viliq::PipelineConfig ablated(viliq::PipelineConfig cfg, const std::string& ablation) {
    if (ablation == "no-srr") cfg.use_srr = false;
    else if (ablation == "no-omp") cfg.use_omp = false;
    else if (ablation == "no-sspi") cfg.use_sspi = false;
    else if (ablation == "no-volume-comp") cfg.use_volume = false;
    else if (ablation != "full")
        throw viliq::InvalidParameter("unknown ablation: " + ablation);
    return cfg;
}

int cmd_simulate(const std::string& out, const std::string& config_path, double eta_cp,
                 double volume, double noise_frac, double jitter, std::uint64_t seed,
                 bool dense, bool airborne, bool no_interference, bool no_ring,
                 const std::string& csv_out) {
    viliq::PipelineConfig cfg = load_config(config_path, seed);
    const viliq::DeviceModel device = viliq::DeviceModel::make_default();

    viliq::VibrationTrace trace;
    if (airborne) {
        trace = viliq::make_airborne_recordings(device, cfg, 1, noise_frac, seed).front();
    } else {
        viliq::SceneSpec scene;
        scene.eta_cp = eta_cp;
        scene.volume_ml = volume;
        scene.noise_frac = noise_frac;
        scene.jitter_std_s = jitter;
        scene.seed = seed;
        scene.with_interference = !no_interference;
        scene.with_ring = !no_ring;
        trace = dense ? viliq::make_dense_trace(device, scene, cfg)
                      : viliq::make_api_trace(device, scene, cfg);
    }
    viliq::write_json(out, viliq::to_json(trace, cfg));
    if (!csv_out.empty()) viliq::write_text(csv_out, viliq::trace_to_csv(trace));
    std::cout << "wrote " << out << " (" << trace.size() << " samples)\n";
    return 0;
}

int cmd_calibrate(const std::string& manifest_path, const std::string& out,
                  const std::string& config_path, std::uint64_t seed) {
    const json manifest = viliq::read_json(manifest_path);
    viliq::PipelineConfig cfg = load_config(config_path, seed);

    viliq::CalibrationBundle bundle;
    bundle.config = cfg;

    std::vector<viliq::VibrationTrace> airborne;
    for (const auto& p : manifest.at("airborne"))
        airborne.push_back(viliq::trace_from_json(viliq::read_json(p.get<std::string>())));
    bundle.sspi = viliq::build_sspi(airborne, cfg.grid.make());

    std::vector<std::pair<viliq::VibrationTrace, double>> refs;
    for (const auto& r : manifest.at("volume_refs"))
        refs.emplace_back(viliq::trace_from_json(viliq::read_json(r.at("path").get<std::string>())),
                          r.at("volume_ml").get<double>());
    bundle.volumes = viliq::build_volume_db_from_traces(refs, cfg, &bundle.sspi);

    viliq::PipelineContext ctx;
    ctx.sspi = &bundle.sspi;
    ctx.volumes = &bundle.volumes;
    for (const auto& t : manifest.at("traces")) {
        const auto trace = viliq::trace_from_json(viliq::read_json(t.at("path").get<std::string>()));
        viliq::PipelineContext point_ctx = ctx;
        if (t.contains("volume_ml")) point_ctx.known_volume_ml = t.at("volume_ml").get<double>();
        const viliq::Features f = viliq::extract_features(trace, cfg, point_ctx);
        viliq::CalibrationPoint p;
        p.known_eta = viliq::Viscosity::from_centipoise(t.at("eta_cp"));
        p.volume_ml = t.value("volume_ml", 0.0);
        p.amplitude = f.amplitude;
        p.lambda = f.lambda;
        p.t_d = f.t_d;
        bundle.points.push_back(p);
    }

    viliq::CalibrateOptions opts;
    opts.omega = 2.0 * viliq::kPi * cfg.drive_freq_hz;
    opts.seed = seed;
    if (manifest.contains("reference_mass")) opts.reference_mass = manifest.at("reference_mass");
    bundle.system = viliq::calibrate(bundle.points, opts);

    viliq::write_json(out, viliq::to_json(bundle));
    std::cout << "calibrated on " << bundle.points.size() << " points, residual "
              << bundle.system.fit_residual << "\n";
    return 0;
}

int cmd_estimate(const std::vector<std::string>& trace_paths, const std::string& calib_path,
                 const std::string& liquids_path, const std::string& out,
                 std::optional<double> volume) {
    const auto bundle = viliq::calibration_bundle_from_json(viliq::read_json(calib_path));
    std::optional<viliq::LiquidDb> liquids;
    if (!liquids_path.empty())
        liquids = viliq::liquid_db_from_json(viliq::read_json(liquids_path));

    viliq::PipelineContext ctx;
    ctx.sspi = &bundle.sspi;
    ctx.volumes = &bundle.volumes;
    ctx.known_volume_ml = volume;

    const std::string expect_hash = viliq::config_hash(bundle.config);
    json rows = json::array();
    std::cout << std::left << std::setw(28) << "trace" << std::setw(14) << "eta_cp"
              << std::setw(10) << "flag" << std::setw(14) << "rel_err_%"
              << "label\n";
    for (const auto& path : trace_paths) {
        const json tj = viliq::read_json(path);
        if (tj.contains("config_hash") && tj.at("config_hash") != expect_hash)
            throw viliq::ConfigHashMismatch("trace " + path +
                                            " was produced under a different config");
        const auto trace = viliq::trace_from_json(tj);
        const auto est = viliq::estimate_trace(trace, bundle.system, bundle.config, ctx);
        json row{{"trace", path},
                 {"eta_cp", est.eta.centipoise()},
                 {"beyond_boundary", est.beyond_boundary}};
        std::ostringstream err_txt, label_txt;
        if (trace.ground_truth) {
            const double gt = trace.ground_truth->eta.centipoise();
            const double rel = std::abs(est.eta.centipoise() - gt) / gt * 100.0;
            row["gt_cp"] = gt;
            row["rel_error_pct"] = rel;
            err_txt << std::fixed << std::setprecision(3) << rel;
        }
        if (liquids) {
            const auto id = viliq::identify(est.eta, *liquids);
            row["label"] = id.label;
            row["log_distance"] = id.distance;
            label_txt << id.label;
        }
        rows.push_back(row);
        std::cout << std::left << std::setw(28) << path << std::setw(14)
                  << est.eta.centipoise() << std::setw(10)
                  << (est.beyond_boundary ? "BEYOND" : "-") << std::setw(14) << err_txt.str()
                  << label_txt.str() << "\n";
    }

    double sum_rel = 0.0;
    int n_rel = 0;
    for (const auto& r : rows)
        if (r.contains("rel_error_pct")) {
            sum_rel += r.at("rel_error_pct").get<double>();
            ++n_rel;
        }
    json report{{"format", "viliq-report/1"},
                {"config_hash", expect_hash},
                {"results", rows}};
    if (n_rel > 0) {
        report["mean_rel_error_pct"] = sum_rel / n_rel;
        std::cout << "mean relative error: " << sum_rel / n_rel << " %\n";
    }
    if (!out.empty()) viliq::write_json(out, report);
    return 0;
}

int cmd_identify(double eta_cp, const std::string& liquids_path) {
    const auto db = viliq::liquid_db_from_json(viliq::read_json(liquids_path));
    const auto id = viliq::identify(viliq::Viscosity::from_centipoise(eta_cp), db);
    std::cout << id.label << " (log distance " << id.distance << ")\n";
    return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& calib_path,
              const std::string& out_dir) {
    const json spec = viliq::read_json(spec_path);
    const auto bundle = viliq::calibration_bundle_from_json(viliq::read_json(calib_path));
    const viliq::DeviceModel device = viliq::DeviceModel::make_default();

    const auto axis = [&](const char* name, std::vector<double> fallback) {
        if (spec.contains("axes") && spec.at("axes").contains(name))
            return spec.at("axes").at(name).get<std::vector<double>>();
        return fallback;
    };
    const std::vector<double> etas = axis("eta_cp", {1.16});
    const std::vector<double> volumes = axis("volume_ml", {500.0});
    const std::vector<double> noises = axis("noise_frac", {1e-4});
    const std::vector<double> jitters = axis("jitter_std_s", {0.0});
    std::vector<std::string> ablations = {"full"};
    if (spec.contains("axes") && spec.at("axes").contains("ablation"))
        ablations = spec.at("axes").at("ablation").get<std::vector<std::string>>();
    const int reps = spec.value("repetitions", 1);
    const std::uint64_t seed = spec.value("seed", 1ULL);
    if (reps < 1) throw viliq::InvalidParameter("repetitions must be >= 1");

    std::vector<SweepCell> cells;
    for (const auto& ab : ablations)
        for (double e : etas)
            for (double v : volumes)
                for (double nz : noises)
                    for (double jt : jitters) cells.push_back({e, v, nz, jt, ab});

    struct Row {
        SweepCell cell;
        int rep;
        double eta_est = 0.0;
        double rel_err = 0.0;
        bool beyond = false;
        std::string status = "ok";
    };
    std::vector<Row> rows(cells.size() * static_cast<std::size_t>(reps));

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= rows.size()) return;
            const std::size_t c = idx / static_cast<std::size_t>(reps);
            const int rep = static_cast<int>(idx % static_cast<std::size_t>(reps));
            const SweepCell& cell = cells[c];
            Row row;
            row.cell = cell;
            row.rep = rep;
            try {
                viliq::SceneSpec scene;
                scene.eta_cp = cell.eta_cp;
                scene.volume_ml = cell.volume_ml;
                scene.noise_frac = cell.noise_frac;
                scene.jitter_std_s = cell.jitter_std_s;
                scene.seed = viliq::derive_seed(seed, c, static_cast<std::uint64_t>(rep));
                const viliq::PipelineConfig cfg = ablated(bundle.config, cell.ablation);
                const auto trace = viliq::make_api_trace(device, scene, cfg);
                viliq::PipelineContext ctx;
                ctx.sspi = &bundle.sspi;
                ctx.volumes = &bundle.volumes;
                const auto est = viliq::estimate_trace(trace, bundle.system, cfg, ctx);
                row.eta_est = est.eta.centipoise();
                row.rel_err = std::abs(row.eta_est - cell.eta_cp) / cell.eta_cp;
                row.beyond = est.beyond_boundary;
            } catch (const viliq::Error& e) {
                row.status = e.what();
            }
            rows[idx] = std::move(row);
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(thread_cap(), static_cast<int>(rows.size()));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ostringstream raw;
    raw.precision(17);
    raw << "ablation,eta_cp,volume_ml,noise_frac,jitter_std_s,rep,eta_est_cp,rel_error,"
           "beyond_boundary,status\r\n";
    for (const auto& r : rows) {
        std::string status = r.status;
        for (auto& ch : status)
            if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
        raw << r.cell.ablation << "," << r.cell.eta_cp << "," << r.cell.volume_ml << ","
            << r.cell.noise_frac << "," << r.cell.jitter_std_s << "," << r.rep << ","
            << r.eta_est << "," << r.rel_err << "," << (r.beyond ? 1 : 0) << "," << status
            << "\r\n";
    }
    viliq::write_text(out_dir + "/sweep_raw.csv", raw.str());

    std::ostringstream summary;
    summary.precision(17);
    summary << "ablation,eta_cp,volume_ml,noise_frac,jitter_std_s,n_ok,n_fail,mean_rel_error,"
               "std_rel_error\r\n";
    for (std::size_t c = 0; c < cells.size(); ++c) {
        double sum = 0.0, sum_sq = 0.0;
        int n_ok = 0, n_fail = 0;
        for (int r = 0; r < reps; ++r) {
            const Row& row = rows[c * static_cast<std::size_t>(reps) + static_cast<std::size_t>(r)];
            if (row.status == "ok") {
                sum += row.rel_err;
                sum_sq += row.rel_err * row.rel_err;
                ++n_ok;
            } else {
                ++n_fail;
            }
        }
        const double mean = n_ok > 0 ? sum / n_ok : 0.0;
        const double var = n_ok > 1 ? (sum_sq - sum * sum / n_ok) / (n_ok - 1) : 0.0;
        summary << cells[c].ablation << "," << cells[c].eta_cp << "," << cells[c].volume_ml
                << "," << cells[c].noise_frac << "," << cells[c].jitter_std_s << "," << n_ok
                << "," << n_fail << "," << mean << "," << std::sqrt(std::max(0.0, var))
                << "\r\n";
    }
    viliq::write_text(out_dir + "/sweep_summary.csv", summary.str());
    std::cout << "wrote " << out_dir << "/sweep_raw.csv and sweep_summary.csv ("
              << rows.size() << " rows)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vibration-to-viscosity estimation pipeline"};
    app.require_subcommand(1);

    std::string out, config_path, manifest_path, calib_path, liquids_path, spec_path, out_dir;
    std::string csv_out;
    std::vector<std::string> trace_paths;
    double eta_cp = 1.0, volume = 500.0, noise_frac = 1e-4, jitter = 0.0;
    std::uint64_t seed = 1;
    bool dense = false, airborne = false, no_interference = false, no_ring = false;
    double known_volume = -1.0;

    auto* sim = app.add_subcommand("simulate", "synthesize a measurement trace");
    sim->add_option("--eta-cp", eta_cp, "liquid viscosity [cP]");
    sim->add_option("--volume", volume, "fill volume [mL]");
    sim->add_option("--noise-frac", noise_frac, "noise std relative to steady amplitude");
    sim->add_option("--jitter", jitter, "API timestamp jitter std [s]");
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--config", config_path, "pipeline config JSON");
    sim->add_option("--out", out, "output trace JSON")->required();
    sim->add_option("--csv", csv_out, "also write CSV export");
    sim->add_flag("--dense", dense, "keep the dense rate (no API resampling)");
    sim->add_flag("--airborne", airborne, "interference-only recording");
    sim->add_flag("--no-interference", no_interference);
    sim->add_flag("--no-ring", no_ring);

    auto* cal = app.add_subcommand("calibrate", "fit system parameters from a manifest");
    cal->add_option("--manifest", manifest_path, "manifest JSON")->required();
    cal->add_option("--config", config_path, "pipeline config JSON");
    cal->add_option("--seed", seed, "RNG seed");
    cal->add_option("--out", out, "output calibration bundle")->required();

    auto* est = app.add_subcommand("estimate", "estimate viscosity from trace files");
    est->add_option("--traces", trace_paths, "trace JSON files")->required();
    est->add_option("--calibration", calib_path, "calibration bundle")->required();
    est->add_option("--liquids", liquids_path, "liquid database for identification");
    est->add_option("--volume", known_volume, "known fill volume [mL]");
    est->add_option("--out", out, "report JSON");

    auto* idc = app.add_subcommand("identify", "1-NN lookup of a viscosity");
    idc->add_option("--eta-cp", eta_cp, "query viscosity [cP]")->required();
    idc->add_option("--liquids", liquids_path, "liquid database")->required();

    auto* swp = app.add_subcommand("sweep", "experiment sweep to CSV");
    swp->add_option("--spec", spec_path, "sweep spec JSON")->required();
    swp->add_option("--calibration", calib_path, "calibration bundle")->required();
    swp->add_option("--out-dir", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(out, config_path, eta_cp, volume, noise_frac, jitter, seed,
                                dense, airborne, no_interference, no_ring, csv_out);
        if (cal->parsed()) return cmd_calibrate(manifest_path, out, config_path, seed);
        if (est->parsed())
            return cmd_estimate(trace_paths, calib_path, liquids_path, out,
                                known_volume > 0 ? std::optional<double>(known_volume)
                                                 : std::nullopt);
        if (idc->parsed()) return cmd_identify(eta_cp, liquids_path);
        if (swp->parsed()) return cmd_sweep(spec_path, calib_path, out_dir);
    } catch (const viliq::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == viliq::ErrorKind::numeric ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
