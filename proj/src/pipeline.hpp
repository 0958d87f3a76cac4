#pragma once

#include <map>
#include <optional>

#include "analysis.hpp"

#include <json.hpp>

namespace ablscar {

using json = nlohmann::json;

// Fully serializable run configuration; unknown keys are rejected on load.
struct RunConfig {
    SystemParams system;

    // orbit search
    double theta_lo_deg = -58.0;
    double theta_hi_deg = -33.0;
    double y_tol_rel = 1e-12;
    int samples_per_arc = 4096;
    double ode_rtol = 1e-12;
    double ode_atol = 1e-12;

    // quantization
    std::vector<int> n_list = {66, 67, 68, 69};
    double eta = 0.0;
    double E_lo = 88.0;
    double E_hi = 104.0;
    bool wall_phase = true;
    double F_tol = 1e-9;

    // boundary layer
    double nu_max = 0.0;  // 0 = auto (0.15 d / sqrt(hbar))
    double taper_fraction = 0.1;
    double focal_mask_frac = 0.01;

    // exact solver
    std::string exact_engine = "galerkin";
    GalerkinConfig galerkin;
    ChannelBasisConfig channel;
    double scan_step = 0.01;

    // analysis
    ComparisonOptions comparison;

    // field grids
    int field_nx = 180;
    int field_ny = 140;
    double field_y_halfwidth = 8.0;

    // poincare
    int poincare_n_random = 24;
    unsigned poincare_seed = 1;
    int poincare_bounces = 300;

    int threads = 1;

    json to_json() const;
    static RunConfig from_json(const json& j);
};

RunConfig load_config(const std::string& path);
std::string canonical_config_string(const RunConfig& cfg);

struct StageFile {
    std::string path;  // relative to the output directory
    std::string sha256;
};

struct StageRecord {
    std::string stage;
    std::string config_checksum;
    bool cached = false;
    double seconds = 0.0;
    std::vector<StageFile> files;
    json results;  // small headline numbers for the manifest
};

struct RunManifest {
    std::string artifact_version;
    json config_echo;
    std::vector<StageRecord> stages;
    bool all_pass = true;

    json to_json() const;
};

struct DependencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Executes pipeline stages against an output directory.  Stage outputs are
// cached per config-section checksum; dependent stages demand a fresh
// upstream manifest.
class Pipeline {
public:
    Pipeline(RunConfig cfg, std::string out_dir);

    // stage in {orbit, stability, quantize, field, exact-scan, exact-state,
    //           husimi, compare, report, all}
    StageRecord run_stage(const std::string& stage);
    const RunManifest& manifest() const { return manifest_; }
    bool all_pass() const { return manifest_.all_pass; }
    json result_summary() const;

private:
    RunConfig cfg_;
    std::string out_;
    RunManifest manifest_;
    ParabolicPotential pot_;

    // in-memory artifacts for the current process
    std::optional<PeriodicOrbit> orbit_;
    std::optional<MonodromyData> mono_;
    std::optional<FloquetData> floquet_;
    std::vector<ABLState> abl_states_;
    std::shared_ptr<GalerkinSolver> solver_;
    std::optional<ComparisonReport> report_;

    ShootingSettings shooting() const;
    QuantizeSettings quantization() const;

    void ensure_orbit();
    void ensure_stability();
    void ensure_quantize();
    void ensure_exact();

    StageRecord do_orbit();
    StageRecord do_stability();
    StageRecord do_quantize();
    StageRecord do_field();
    StageRecord do_exact_scan();
    StageRecord do_exact_state();
    StageRecord do_husimi();
    StageRecord do_compare();
    StageRecord do_report();

    void require_stage(const std::string& name) const;
    std::optional<StageRecord> load_cached(const std::string& stage,
                                           const std::string& checksum) const;
    void persist_stage(const StageRecord& rec);
    StageFile write_text(const std::string& rel_path, const std::string& content);
    std::string stage_checksum(const std::string& stage) const;
};

}  // namespace ablscar
