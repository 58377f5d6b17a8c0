// Command-line front end: run one configuration, sweep the beta/epsilon
// lists, validate a saved design by Monte Carlo, or compare result CSVs
// against the published tables.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rrbto/rrbto.hpp"

namespace {

void write_run_artifacts(const rrbto::Driver& driver, const rrbto::RunArtifacts& art,
                         const std::string& outdir) {
    const rrbto::ProblemDef& p = driver.spec().config.problem;
    const std::string base = (std::filesystem::path(outdir) / driver.basename(art.beta, art.epsilon)).string();
    rrbto::write_design(base + "_design.txt", p.nelx, p.nely, art.sora.design);
    rrbto::write_pgm(base + ".pgm", p.nelx, p.nely, art.sora.physical);
}

int cmd_run(const std::string& config_path, const std::string& outdir_flag, bool quiet) {
    rrbto::RunSpec spec = rrbto::parse_config_file(config_path);
    if (!outdir_flag.empty()) spec.output_dir = outdir_flag;
    std::filesystem::create_directories(spec.output_dir);
    rrbto::Driver driver(spec);
    const std::string base =
        (std::filesystem::path(spec.output_dir) / driver.basename(spec.config.beta, spec.config.epsilon))
            .string();
    rrbto::TraceLog log(base + "_trace.log", !quiet);
    const rrbto::RunArtifacts& art = driver.run_single(spec.config.beta, spec.config.epsilon, log);
    write_run_artifacts(driver, art, spec.output_dir);
    rrbto::write_csv(base + "_metrics.csv", {art.row});
    std::cout << rrbto::csv_header() << "\n" << rrbto::csv_format_row(art.row) << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& outdir_flag, bool quiet) {
    rrbto::RunSpec spec = rrbto::parse_config_file(config_path);
    if (!outdir_flag.empty()) spec.output_dir = outdir_flag;
    std::filesystem::create_directories(spec.output_dir);
    rrbto::Driver driver(spec);
    rrbto::TraceLog log(
        (std::filesystem::path(spec.output_dir) / (spec.benchmark + "_sweep_trace.log")).string(), !quiet);
    const std::vector<rrbto::CsvRow> rows =
        driver.sweep(log, [&](const rrbto::RunArtifacts& art) { write_run_artifacts(driver, art, spec.output_dir); });
    const std::string csv =
        (std::filesystem::path(spec.output_dir) / (spec.benchmark + "_sweep.csv")).string();
    rrbto::write_csv(csv, rows);
    std::cout << "wrote " << rows.size() << " rows to " << csv << "\n";
    return 0;
}

int cmd_validate(const std::string& design_path, const std::string& config_path, const std::string& mode_flag,
                 int samples_flag, long long seed_flag) {
    rrbto::RunSpec spec = rrbto::parse_config_file(config_path);
    if (samples_flag > 0) spec.mc_samples = samples_flag;
    if (seed_flag >= 0) spec.mc_seed = static_cast<std::uint64_t>(seed_flag);
    if (mode_flag == "full")
        spec.mc_mode = rrbto::McMode::FullFea;
    else if (mode_flag == "surrogate")
        spec.mc_mode = rrbto::McMode::Surrogate;
    else if (!mode_flag.empty())
        throw rrbto::ConfigError("--mode must be full or surrogate");

    const rrbto::DesignFile d = rrbto::read_design(design_path);
    const rrbto::ProblemDef& p = spec.config.problem;
    if (d.nelx != p.nelx || d.nely != p.nely)
        throw rrbto::InvalidArgument("design mesh " + std::to_string(d.nelx) + "x" + std::to_string(d.nely) +
                                     " does not match the configured benchmark");

    rrbto::RrbtoEngine engine(spec.config);
    const Eigen::VectorXd physical = engine.filter().apply(d.x);
    rrbto::LhsSampler sampler{spec.mc_samples, spec.config.kl.M, spec.mc_seed};
    const Eigen::MatrixXd samples = rrbto::lhs_sample(sampler);

    rrbto::McReport rep;
    if (spec.mc_mode == rrbto::McMode::Surrogate) {
        const rrbto::ResponseSurface surface = engine.fit_surface(physical);
        rep = rrbto::validate_design(engine.solver(), engine.kl(), spec.config.penal, physical, p.u0,
                                     samples, rrbto::McMode::Surrogate, &surface);
    } else {
        rep = rrbto::validate_design(engine.solver(), engine.kl(), spec.config.penal, physical, p.u0,
                                     samples, rrbto::McMode::FullFea);
    }

    std::cout << "mode=" << (rep.mode == rrbto::McMode::FullFea ? "full" : "surrogate") << "\n"
              << "samples=" << rep.n << "\n"
              << "seed=" << spec.mc_seed << "\n"
              << "Pf=" << rrbto::format_full(rep.pf) << "\n"
              << "se_Pf=" << rrbto::format_full(rep.se_pf) << "\n"
              << "muB=" << rrbto::format_full(rep.mu_B) << "\n"
              << "sigmaB=" << rrbto::format_full(rep.sigma_B) << "\n";
    if (rep.mode == rrbto::McMode::FullFea)
        std::cout << "muC=" << rrbto::format_full(rep.mu_C) << "\n"
                  << "sigmaC=" << rrbto::format_full(rep.sigma_C) << "\n"
                  << "fea_failures=" << rep.fea_failures << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& csv_paths) {
    std::vector<std::pair<std::string, std::vector<rrbto::CsvRow>>> files;
    for (const std::string& path : csv_paths) files.emplace_back(path, rrbto::read_csv(path));
    rrbto::ReportSummary summary;
    std::cout << rrbto::format_report(files, &summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust reliability-based topology optimization under a random-field modulus"};
    app.require_subcommand(1);

    std::string config_path, outdir, design_path, mode_flag;
    std::vector<std::string> csv_paths;
    int samples_flag = 0;
    long long seed_flag = -1;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "Optimize a single (beta, epsilon) configuration");
    run->add_option("config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    run->add_option("--output-dir", outdir, "override the configured output directory");
    run->add_flag("--quiet", quiet, "suppress progress output");

    CLI::App* sweep = app.add_subcommand("sweep", "Optimize the full beta_list x epsilon_list grid");
    sweep->add_option("config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--output-dir", outdir, "override the configured output directory");
    sweep->add_flag("--quiet", quiet, "suppress progress output");

    CLI::App* validate = app.add_subcommand("validate", "Monte Carlo validation of a saved design");
    validate->add_option("design", design_path, "design file (from a run)")->required()->check(CLI::ExistingFile);
    validate->add_option("config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    validate->add_option("--mode", mode_flag, "full or surrogate");
    validate->add_option("--samples", samples_flag, "sample count override");
    validate->add_option("--seed", seed_flag, "seed override");

    CLI::App* report = app.add_subcommand("report", "Compare metrics CSVs against the published tables");
    report->add_option("csv", csv_paths, "metrics CSV files")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, outdir, quiet);
        if (sweep->parsed()) return cmd_sweep(config_path, outdir, quiet);
        if (validate->parsed()) return cmd_validate(design_path, config_path, mode_flag, samples_flag, seed_flag);
        if (report->parsed()) return cmd_report(csv_paths);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
