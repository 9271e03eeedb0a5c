// cluster: command-line front end for the tilted k-means library.
//
//   cluster solve --input data.csv --k 3 --t 0.1 --out out/
//   cluster run --config experiment.json
//   cluster trajectory --blobs-n 200 --k 2 --out out/
//   cluster scale --sizes 10000,20000,40000 --out out/
//   cluster blobs --n 1000 --k 3 --d 2 --out blobs.csv

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tkm/harness.hpp"
#include "tkm/tkm.hpp"

namespace {

using namespace tkm;
namespace fs = std::filesystem;

struct SolverFlags {
    std::size_t k = 3;
    double t = 0.1;
    double eta = 0.05;
    std::size_t epochs = 5;
    std::size_t batch = 100;
    std::size_t iters = 500;
    double tol = 0;
    std::uint64_t seed = 0;
    std::string method = "tkm";
    std::string denominator = "full";

    void attach(CLI::App* app) {
        app->add_option("--k", k, "Number of clusters")->check(CLI::PositiveNumber);
        app->add_option("--t", t, "Tilt (>= 0)")->check(CLI::NonNegativeNumber);
        app->add_option("--eta", eta, "Learning rate");
        app->add_option("--epochs", epochs, "Mini-batch epochs per iteration");
        app->add_option("--batch", batch, "Mini-batch size");
        app->add_option("--iters", iters, "Outer iterations");
        app->add_option("--tol", tol, "Early-stop relative change over 10 iterations (0 disables)");
        app->add_option("--seed", seed, "Random seed");
        app->add_option("--method", method, "tkm, nf or lloyd")->check(CLI::IsMember({"tkm", "nf", "lloyd"}));
        app->add_option("--denominator", denominator, "Gradient denominator: full or batch")
            ->check(CLI::IsMember({"full", "batch"}));
    }

    SolverConfig config() const {
        SolverConfig cfg;
        cfg.k = k;
        cfg.t = t;
        cfg.eta = eta;
        cfg.epochs = epochs;
        cfg.batch_size = batch;
        cfg.max_iters = iters;
        cfg.tol = tol;
        cfg.seed = seed;
        cfg.method = parse_method(method);
        cfg.denominator = parse_denominator(denominator);
        return cfg;
    }
};

struct InputFlags {
    std::string input;
    std::vector<std::string> columns;
    bool standardize = false;
    bool unit_normalize = false;
    harness::BlobSource blobs;

    void attach(CLI::App* app, bool allow_blobs) {
        auto* in = app->add_option("--input", input, "CSV file with a header row");
        app->add_option("--columns", columns, "Columns to use (default: all)")->delimiter(',');
        app->add_flag("--standardize", standardize, "Z-score every column");
        app->add_flag("--unit-normalize", unit_normalize, "Scale every row to unit norm");
        if (allow_blobs) {
            app->add_option("--blobs-n", blobs.n, "Blob dataset size when no --input is given");
            app->add_option("--blobs-k", blobs.k, "Number of blobs");
            app->add_option("--blobs-spread", blobs.spread, "Blob standard deviation");
            app->add_option("--blobs-seed", blobs.seed, "Blob generator seed");
        } else {
            in->required();
        }
    }

    Dataset load(std::size_t blob_d) const {
        PreprocessSpec spec{columns, standardize, unit_normalize};
        if (input.empty()) {
            auto b = blobs;
            b.d = blob_d;
            return preprocess(make_blobs(b.n, b.k, b.d, b.spread, b.seed).data, spec);
        }
        if (spec.selected_columns.empty()) {
            std::ifstream in(input);
            std::string header;
            if (!in || !std::getline(in, header)) {
                throw Error("cannot read header of '" + input + "'");
            }
            for (auto field : tkm::detail::split_commas(header)) {
                spec.selected_columns.emplace_back(field);
            }
        }
        auto loaded = load_csv(input, spec);
        if (loaded.dropped_rows > 0) {
            std::cerr << "dropped " << loaded.dropped_rows << " rows with missing or non-numeric values\n";
        }
        return std::move(loaded.data);
    }
};

int run_solve(const InputFlags& in, const SolverFlags& flags, const std::string& out_dir) {
    const auto ds = in.load(2);
    const auto cfg = flags.config();
    const auto report = solve(ds, cfg);
    harness::ensure_dir(out_dir);
    harness::write_text(fs::path(out_dir) / "result.json", harness::report_to_json(cfg, ds, report).dump(2) + "\n");
    std::string trace = harness::trace_csv_header();
    harness::append_trace(trace, cfg.k, 0, harness::trace_rows(cfg, report, true));
    harness::write_text(fs::path(out_dir) / "trace.csv", trace);
    std::printf("n=%zu d=%zu k=%zu iterations=%zu sse=%.6g tilted_sse=%.6g time=%.3fs\n", ds.n(), ds.d(), cfg.k,
                report.iterations_run, report.metrics.sse, report.metrics.tilted_sse, report.wall_time);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tilted k-means: individually fair clustering via exponential tilting"};
    app.require_subcommand(1);

    auto* solve_cmd = app.add_subcommand("solve", "Cluster one dataset and write result.json and trace.csv");
    InputFlags solve_in;
    SolverFlags solve_flags;
    std::string solve_out = "out";
    solve_in.attach(solve_cmd, false);
    solve_flags.attach(solve_cmd);
    solve_cmd->add_option("--out", solve_out, "Output directory");

    auto* run_cmd = app.add_subcommand("run", "Run an experiment described by a JSON config");
    std::string config_path;
    run_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();

    auto* traj_cmd = app.add_subcommand("trajectory", "Final centroids over a geometric t grid (2-D data)");
    InputFlags traj_in;
    traj_in.blobs.n = 200;
    traj_in.blobs.k = 2;
    SolverFlags traj_flags;
    traj_flags.k = 2;
    traj_flags.batch = 20;
    traj_flags.iters = 200;
    double t_min = 1e-2, t_max = 1e2;
    std::size_t t_points = 60;
    std::string traj_out = "out";
    traj_in.attach(traj_cmd, true);
    traj_flags.attach(traj_cmd);
    traj_cmd->add_option("--t-min", t_min, "Smallest t");
    traj_cmd->add_option("--t-max", t_max, "Largest t");
    traj_cmd->add_option("--t-points", t_points, "Grid size");
    traj_cmd->add_option("--out", traj_out, "Output directory");

    auto* scale_cmd = app.add_subcommand("scale", "Wall time of solve on blobs of increasing size (batch = n/50)");
    std::vector<std::size_t> sizes{10000, 20000, 40000};
    harness::BlobSource scale_blobs;
    SolverFlags scale_flags;
    std::size_t scale_repeats = 3;
    std::string scale_out = "out";
    scale_cmd->add_option("--sizes", sizes, "Ascending dataset sizes")->delimiter(',');
    scale_cmd->add_option("--d", scale_blobs.d, "Dimension");
    scale_cmd->add_option("--blobs-k", scale_blobs.k, "Number of blobs");
    scale_cmd->add_option("--repeats", scale_repeats, "Timed solves per size (median is reported)");
    scale_flags.attach(scale_cmd);
    scale_cmd->add_option("--out", scale_out, "Output directory");

    auto* blobs_cmd = app.add_subcommand("blobs", "Write a synthetic Gaussian-blob CSV");
    harness::BlobSource gen;
    std::string blobs_out;
    bool with_labels = false;
    blobs_cmd->add_option("--n", gen.n, "Points");
    blobs_cmd->add_option("--k", gen.k, "Blobs");
    blobs_cmd->add_option("--d", gen.d, "Dimension");
    blobs_cmd->add_option("--spread", gen.spread, "Blob standard deviation");
    blobs_cmd->add_option("--seed", gen.seed, "Seed");
    blobs_cmd->add_flag("--labels", with_labels, "Append the true blob label as a 'label' column");
    blobs_cmd->add_option("--out", blobs_out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*solve_cmd) {
            return run_solve(solve_in, solve_flags, solve_out);
        }
        if (*run_cmd) {
            const auto spec = harness::load_experiment_spec(config_path);
            const auto result = harness::run_experiment(spec);
            std::printf("%zu runs written to %s\n", result.runs.size(), spec.output_dir.string().c_str());
            return 0;
        }
        if (*traj_cmd) {
            const auto ds = traj_in.load(2);
            const auto grid = harness::geometric_grid(t_min, t_max, t_points);
            const auto rows = harness::sweep_t_trajectory(ds, traj_flags.config(), grid, fs::path(traj_out));
            std::printf("%zu centroid rows written to %s/trajectory.csv\n", rows.size(), traj_out.c_str());
            return 0;
        }
        if (*scale_cmd) {
            const auto rows =
                harness::runtime_scaling(scale_blobs, sizes, scale_flags.config(), scale_repeats, fs::path(scale_out));
            for (const auto& r : rows) {
                std::printf("n=%zu batch=%zu seconds=%.4f ratio=%.3f\n", r.n, r.batch_size, r.seconds, r.ratio);
            }
            return 0;
        }
        if (*blobs_cmd) {
            const auto blobs = make_blobs(gen.n, gen.k, gen.d, gen.spread, gen.seed);
            std::string text;
            for (std::size_t m = 0; m < gen.d; ++m) {
                text += (m ? "," : "") + blobs.data.column_names()[m];
            }
            text += with_labels ? ",label\n" : "\n";
            for (std::size_t i = 0; i < gen.n; ++i) {
                for (std::size_t m = 0; m < gen.d; ++m) {
                    text += (m ? "," : "") + harness::fmt(blobs.data(i, m));
                }
                text += with_labels ? "," + std::to_string(blobs.labels[i]) + "\n" : "\n";
            }
            harness::write_text(blobs_out, text);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
