#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracspec/recovery.hpp"
#include "fracspec/source_factory.hpp"
#include "fracspec/spectral_manifold.hpp"

namespace fracspec {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitTolerance = 3, kExitProvenance = 4 };

struct ProbeSpec {
    double lo = 0.0;
    double hi = 1.0;
    double amp = 1.0;
    int psi = 0;  // index into default_psi
};

struct SourceSpec {
    enum class Kind { H, Probes };
    Kind kind = Kind::H;
    SourceHParams h;
    BumpKind bump = BumpKind::Exp;
    std::vector<ProbeSpec> probes;
};

struct RecoverySpec {
    AbscissaPolicy abscissae;
    int k_max = 12;
    PoleFitOptions fit;
    ExtractOptions extract;
    /// Optional acceptance targets; a violation fails the run.
    std::vector<double> expected_lambda;
    std::vector<int> expected_ranks;
    double lambda_rel_tol = 1e-3;
    /// Frobenius gate against the exact restricted projections; <= 0 disables.
    double frobenius_tol = 1e-2;
    /// Warnings (failures under --strict) above these levels.
    double warn_fit_misfit = 1e-6;
    double warn_psd_defect = 1e-3;
};

struct WaveSpec {
    TimeGrid grid{6.0, 2048};
    int n_sources = 5;
    double gate = 3e-2;
};

/// Configuration of one experiment; see README for the JSON schema.
struct ExperimentConfig {
    ManifoldSpec manifold;
    RegionSpec patch;
    double alpha = 0.5;
    double beta = 1.0;
    TimeGrid grid{1.0, 2048};
    SourceSpec source;
    RecoverySpec recovery;
    WaveSpec wave;
    std::uint64_t seed = 0;

    /// Throws InvalidParameter with an actionable message.
    void validate() const;
    nlohmann::json to_json() const;
    /// Hash of the canonical JSON form.
    std::string hash() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunResult {
    int exit_code = kExitOk;
    std::string status;  // one line
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> outputs;
};

struct RunOptions {
    bool strict = false;
    int workers = 0;  // 0 keeps the OpenMP default
};

/// Forward records of the configured source plus manifest.json.
RunResult run_simulate(const ExperimentConfig& c, const std::filesystem::path& out, const RunOptions& opt = {});

/// Spectral data, report.txt and poles.csv from the configured forward model,
/// after checking the records' provenance against the config.
RunResult run_recover(const ExperimentConfig& c, const std::vector<std::filesystem::path>& records,
                      const std::filesystem::path& out, const RunOptions& opt = {});

/// hyp_apply on the given spectral data against the wave oracle for
/// n_sources seeded random sources; wavecheck.csv and a pass/fail status.
RunResult run_wavecheck(const ExperimentConfig& c, const std::filesystem::path& spectral,
                        const std::filesystem::path& out, const RunOptions& opt = {});

/// CSV exports of the artifacts found in dir.
RunResult run_report(const std::filesystem::path& dir, const RunOptions& opt = {});

/// Maps an exception from a run to its exit code.
int exit_code_for(const std::exception& e);

}  // namespace fracspec
