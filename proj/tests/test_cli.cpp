#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <doctest.h>
#include <json.hpp>

#include "fracspec/io.hpp"
#include "fracspec/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fracspec;

namespace {

const char* kSmall = R"({
  "manifold": {"kind": "torus", "n_modes": 25},
  "patch": {"kind": "rectangle", "lo1": 0.0, "hi1": 3.141592653589793, "lo2": 0.0, "hi2": 3.141592653589793},
  "alpha": 0.5, "beta": 1.0,
  "time": {"t_max": 1.0, "n_steps": 1024},
  "source": {"kind": "h", "S": 0.5, "T": 1.0, "K_terms": 4},
  "recovery": {"count": 32, "k_max": 8, "expected_lambda": [0, 1, 2], "expected_ranks": [1, 4, 4]},
  "wave": {"t_max": 6.0, "n_steps": 1024, "n_sources": 3},
  "seed": 3
})";

struct Workdir {
    fs::path root;
    Workdir() {
        root = fs::temp_directory_path() / ("fracspec_cli_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Workdir() { fs::remove_all(root); }
    fs::path write(const std::string& name, const std::string& text) const {
        const fs::path p = root / name;
        write_text(p, text);
        return p;
    }
};

int cli(const std::string& args) {
    const std::string cmd = std::string(FRACSPEC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("simulate is deterministic and validates") {
    Workdir w;
    const fs::path cfg = w.write("small.json", kSmall);
    REQUIRE(cli("simulate --config " + q(cfg) + " --out " + q(w.root / "a")) == 0);
    REQUIRE(cli("simulate --config " + q(cfg) + " --out " + q(w.root / "b") + " --workers 1") == 0);
    for (const char* f : {"record.frec", "manifest.json", "exact_spectral.json"}) {
        REQUIRE(fs::exists(w.root / "a" / f));
        CHECK(file_sha256(w.root / "a" / f) == file_sha256(w.root / "b" / f));
    }
    const auto man = nlohmann::json::parse(read_text(w.root / "a" / "manifest.json"));
    CHECK(man.at("schema_version") == kSchemaVersion);
    CHECK(man.at("config_hash") == load_config(cfg).hash());
    for (const auto& f : man.at("files")) CHECK(f.at("sha256") == file_sha256(w.root / "a" / f.at("name").get<std::string>()));

    auto bad = nlohmann::json::parse(kSmall);
    bad["source"]["S"] = 1.0;
    CHECK(cli("simulate --config " + q(w.write("bad.json", bad.dump())) + " --out " + q(w.root / "c")) == kExitValidation);
    bad = nlohmann::json::parse(kSmall);
    bad["recovery"]["typo"] = 1;
    CHECK(cli("simulate --config " + q(w.write("bad2.json", bad.dump())) + " --out " + q(w.root / "c")) == kExitValidation);
    CHECK(cli("simulate --config " + q(w.root / "missing.json")) == kExitValidation);
    CHECK(cli("frobnicate") == kExitValidation);
}

TEST_CASE("reference config starts from rest") {
    Workdir w;
    const fs::path cfg = fs::path(FRACSPEC_SOURCE_DIR) / "configs" / "torus-a05-b1.json";
    REQUIRE(cli("simulate --config " + q(cfg) + " --out " + q(w.root)) == 0);
    const MeasurementRecord r = read_record(w.root / "record.frec");
    CHECK(r.values.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.values.cwiseAbs().maxCoeff() > 0.0);
    CHECK(r.grid.n_steps == 2048);
}

TEST_CASE("recover, wavecheck and report") {
    Workdir w;
    const fs::path cfg = w.write("small.json", kSmall);
    const fs::path out = w.root / "run";
    REQUIRE(cli("simulate --config " + q(cfg) + " --out " + q(out)) == 0);
    REQUIRE(cli("recover --config " + q(cfg) + " --out " + q(out)) == 0);
    const SpectralData sd = read_spectral(out / "spectral.json");
    REQUIRE(sd.entries.size() >= 3);
    CHECK(sd.entries[1].lambda == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(sd.entries[1].rank == 4);
    CHECK(sd.provenance.at("status") == "ok");
    const std::string report = read_text(out / "report.txt");
    CHECK(report.find("status PASS") != std::string::npos);
    CHECK(report.find("windowed peeling") != std::string::npos);

    // Byte-identical spectral payload on rerun.
    REQUIRE(cli("recover --config " + q(cfg) + " --out " + q(w.root / "again") + " " + q(out / "record.frec")) == 0);
    CHECK(file_sha256(out / "spectral.json") == file_sha256(w.root / "again" / "spectral.json"));

    // Tolerance targets the data cannot meet.
    auto tight = nlohmann::json::parse(kSmall);
    tight["recovery"]["expected_lambda"] = {0, 1.01, 2};
    CHECK(cli("recover --config " + q(w.write("tight.json", tight.dump())) + " --out " + q(w.root / "t") + " " +
              q(out / "record.frec")) == kExitTolerance);

    REQUIRE(cli("wavecheck --config " + q(cfg) + " --out " + q(out) + " --spectral " + q(out / "exact_spectral.json")) == 0);
    {
        const std::string csv = read_text(out / "wavecheck.csv");
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        double worst = 0.0;
        while (std::getline(in, line)) {
            if (line.find(",all,") == std::string::npos) continue;
            worst = std::max(worst, std::stod(line.substr(line.rfind(',') + 1)));
        }
        CHECK(worst > 0.0);
        CHECK(worst <= 1e-4);
    }
    CHECK(cli("wavecheck --config " + q(cfg) + " --out " + q(out)) == 0);

    // Half the groups: FAIL.
    auto j = nlohmann::json::parse(read_text(out / "exact_spectral.json"));
    j["entries"].erase(j["entries"].begin() + static_cast<long>(j["entries"].size() / 2), j["entries"].end());
    const fs::path half = w.write("half.json", j.dump());
    CHECK(cli("wavecheck --config " + q(cfg) + " --out " + q(w.root / "h") + " --spectral " + q(half)) == kExitTolerance);
    CHECK(cli("wavecheck --config " + q(cfg) + " --out " + q(w.root / "h") + " --spectral " + q(w.root / "nope.json")) ==
          kExitValidation);

    REQUIRE(cli("report --out " + q(out)) == 0);
    CHECK(fs::exists(out / "record.csv"));
    CHECK(fs::exists(out / "record_norm.csv"));
    CHECK(fs::exists(out / "spectral_poles.csv"));
    CHECK(fs::exists(out / "exact_spectral_poles.csv"));
}

TEST_CASE("provenance and empty results") {
    Workdir w;
    const fs::path cfg = w.write("small.json", kSmall);
    const fs::path out = w.root / "run";
    REQUIRE(cli("simulate --config " + q(cfg) + " --out " + q(out)) == 0);

    // One flipped payload byte.
    const fs::path tampered = w.root / "tampered";
    fs::create_directories(tampered);
    fs::copy(out / "record.frec", tampered / "record.frec");
    fs::copy(out / "manifest.json", tampered / "manifest.json");
    {
        std::fstream f(tampered / "record.frec", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-8, std::ios::end);
        const char x = 0x55;
        f.write(&x, 1);
    }
    CHECK(cli("recover --config " + q(cfg) + " --out " + q(w.root / "r1") + " " + q(tampered / "record.frec")) ==
          kExitProvenance);

    // A record from a different configuration.
    auto other = nlohmann::json::parse(kSmall);
    other["alpha"] = 0.6;
    const fs::path ocfg = w.write("other.json", other.dump());
    CHECK(cli("recover --config " + q(ocfg) + " --out " + q(w.root / "r2") + " " + q(out / "record.frec")) == kExitProvenance);

    // All-zero record with matching provenance: explicit empty result.
    const fs::path zdir = w.root / "zero";
    fs::create_directories(zdir);
    MeasurementRecord z = read_record(out / "record.frec");
    z.values.setZero();
    write_record(zdir / "record.frec", z, load_config(cfg).hash());
    REQUIRE(cli("recover --config " + q(cfg) + " --out " + q(zdir)) == 0);
    const SpectralData sd = read_spectral(zdir / "spectral.json");
    CHECK(sd.empty());
    CHECK(sd.provenance.at("status") == "empty");
    CHECK(read_text(zdir / "report.txt").find("EMPTY") != std::string::npos);
}

TEST_CASE("record and spectral round trip") {
    Workdir w;
    MeasurementRecord r;
    r.grid = TimeGrid{2.0, 3};
    r.values = Eigen::MatrixXd::Random(4, 5);
    r.meta = RecordMeta{0.5, 0.75, "m", "p", "s"};
    write_record(w.root / "r.frec", r, "cfg");
    std::string ch;
    const MeasurementRecord b = read_record(w.root / "r.frec", &ch);
    CHECK(ch == "cfg");
    CHECK(b.grid == r.grid);
    CHECK(b.meta == r.meta);
    CHECK(b.values == r.values);

    write_text(w.root / "junk.frec", "not a record");
    CHECK_THROWS_AS(read_record(w.root / "junk.frec"), ProvenanceError);
    {
        const std::string full = read_text(w.root / "r.frec");
        write_text(w.root / "short.frec", full.substr(0, full.size() - 3));
    }
    CHECK_THROWS_AS(read_record(w.root / "short.frec"), ProvenanceError);

    SpectralData d;
    d.beta = 0.5;
    d.weights = Eigen::VectorXd::Constant(3, 0.25);
    SpectralEntry e;
    e.pole = 2.0;
    e.lambda = 4.0;
    e.rank = 1;
    e.residue = Eigen::MatrixXd::Random(3, 3);
    e.spectrum = Eigen::VectorXd::Ones(3);
    d.entries.push_back(e);
    d.provenance["origin"] = "test";
    write_spectral(w.root / "d.json", d, "cfg");
    const SpectralData d2 = read_spectral(w.root / "d.json", &ch);
    CHECK(ch == "cfg");
    REQUIRE(d2.entries.size() == 1);
    CHECK(d2.entries[0].residue == e.residue);
    CHECK(d2.entries[0].lambda == 4.0);
    CHECK(d2.beta == 0.5);
    CHECK(d2.provenance.at("origin") == "test");
}

TEST_CASE("config schema round trip") {
    const ExperimentConfig c = config_from_json(nlohmann::json::parse(kSmall));
    c.validate();
    const ExperimentConfig d = config_from_json(c.to_json());
    CHECK(c.hash() == d.hash());
    CHECK(d.recovery.k_max == 8);
    CHECK(d.source.h.K_terms == 4);

    ExperimentConfig e = c;
    e.alpha = 1.5;
    CHECK_THROWS_AS(e.validate(), InvalidParameter);
    e = c;
    e.source.h.K_terms = 7;
    CHECK_THROWS_AS(e.validate(), InvalidParameter);
    e = c;
    e.wave.grid.n_steps = 8;
    CHECK_THROWS_AS(e.validate(), InvalidParameter);
    e = c;
    e.wave.grid = TimeGrid{60.0, 20};
    CHECK_THROWS_AS(e.validate(), InvalidParameter);
}
