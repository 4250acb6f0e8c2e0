#include "fracspec/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fracspec/errors.hpp"
#include "fracspec/hash.hpp"

namespace fracspec {

static_assert(std::endian::native == std::endian::little, "record payloads are written in host byte order");

namespace {

constexpr char kMagic[8] = {'F', 'S', 'P', 'E', 'C', 'R', 'E', 'C'};

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

Eigen::MatrixXd json_matrix(const nlohmann::json& j) {
    const auto n = static_cast<Eigen::Index>(j.size());
    const auto c = n > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Eigen::MatrixXd m(n, c);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != c) throw ProvenanceError("spectral file: ragged matrix");
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vector(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void write_record(const std::filesystem::path& path, const MeasurementRecord& rec, const std::string& config_hash) {
    nlohmann::json h;
    h["schema_version"] = kSchemaVersion;
    h["kind"] = "measurement_record";
    h["grid"] = {{"t_max", rec.grid.t_max}, {"n_steps", rec.grid.n_steps}};
    h["rows"] = rec.values.rows();
    h["cols"] = rec.values.cols();
    h["alpha"] = rec.meta.alpha;
    h["beta"] = rec.meta.beta;
    h["manifold_hash"] = rec.meta.manifold_hash;
    h["patch_hash"] = rec.meta.patch_hash;
    h["source_hash"] = rec.meta.source_hash;
    h["config_hash"] = config_hash;
    h["units"] = {{"time", "model time"}, {"values", "solution samples on the V-grid"}};
    const std::string header = h.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidParameter("cannot write " + path.string());
    const std::uint32_t version = kSchemaVersion;
    const std::uint64_t len = header.size();
    f.write(kMagic, sizeof kMagic);
    f.write(reinterpret_cast<const char*>(&version), sizeof version);
    f.write(reinterpret_cast<const char*>(&len), sizeof len);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = rec.values;
    f.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!f) throw InvalidParameter("short write to " + path.string());
}

MeasurementRecord read_record(const std::filesystem::path& path, std::string* config_hash) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidParameter("cannot open record " + path.string());
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t len = 0;
    f.read(magic, sizeof magic);
    f.read(reinterpret_cast<char*>(&version), sizeof version);
    f.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!f || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw ProvenanceError(path.string() + ": not a record file");
    if (version != static_cast<std::uint32_t>(kSchemaVersion))
        throw ProvenanceError(path.string() + ": unsupported schema version " + std::to_string(version));
    if (len > (1u << 20)) throw ProvenanceError(path.string() + ": header too large");
    std::string header(len, '\0');
    f.read(header.data(), static_cast<std::streamsize>(len));
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw ProvenanceError(path.string() + ": bad header: " + e.what());
    }
    MeasurementRecord rec;
    rec.grid = TimeGrid{h.at("grid").at("t_max").get<double>(), h.at("grid").at("n_steps").get<int>()};
    const auto rows = h.at("rows").get<Eigen::Index>();
    const auto cols = h.at("cols").get<Eigen::Index>();
    rec.meta = RecordMeta{h.at("alpha").get<double>(), h.at("beta").get<double>(), h.at("manifold_hash").get<std::string>(),
                          h.at("patch_hash").get<std::string>(), h.at("source_hash").get<std::string>()};
    if (config_hash) *config_hash = h.value("config_hash", "");
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    f.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!f) throw ProvenanceError(path.string() + ": truncated payload");
    f.peek();
    if (!f.eof()) throw ProvenanceError(path.string() + ": trailing bytes after payload");
    rec.values = rm;
    return rec;
}

nlohmann::json spectral_to_json(const SpectralData& d) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "spectral_data";
    j["units"] = {{"pole", "lambda^beta"}, {"lambda", "Laplace-Beltrami eigenvalue"}, {"residue", "V-grid operator"}};
    j["beta"] = d.beta;
    j["weights"] = vector_json(d.weights);
    j["fit_misfit"] = d.fit_misfit;
    j["z"] = d.z;
    j["provenance"] = d.provenance;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : d.entries) {
        j["entries"].push_back({{"pole", e.pole},
                                {"lambda", e.lambda},
                                {"rank", e.rank},
                                {"misfit", e.misfit},
                                {"symmetry_defect", e.symmetry_defect},
                                {"psd_defect", e.psd_defect},
                                {"idempotency_defect", e.idempotency_defect},
                                {"spectrum", vector_json(e.spectrum)},
                                {"residue", matrix_json(e.residue)}});
    }
    return j;
}

SpectralData spectral_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kSchemaVersion) throw ProvenanceError("spectral file: unsupported schema version");
        SpectralData d;
        d.beta = j.at("beta").get<double>();
        d.weights = json_vector(j.at("weights"));
        d.fit_misfit = j.value("fit_misfit", 0.0);
        d.z = j.value("z", std::vector<double>{});
        d.provenance = j.value("provenance", std::map<std::string, std::string>{});
        for (const auto& e : j.at("entries")) {
            SpectralEntry s;
            s.pole = e.at("pole").get<double>();
            s.lambda = e.at("lambda").get<double>();
            s.rank = e.at("rank").get<int>();
            s.misfit = e.value("misfit", 0.0);
            s.symmetry_defect = e.value("symmetry_defect", 0.0);
            s.psd_defect = e.value("psd_defect", 0.0);
            s.idempotency_defect = e.value("idempotency_defect", 0.0);
            s.spectrum = json_vector(e.at("spectrum"));
            s.residue = json_matrix(e.at("residue"));
            if (s.residue.rows() != d.weights.size() || s.residue.cols() != d.weights.size())
                throw ProvenanceError("spectral file: residue does not match the weight vector");
            d.entries.push_back(std::move(s));
        }
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ProvenanceError(std::string("spectral file: ") + e.what());
    }
}

void write_spectral(const std::filesystem::path& path, const SpectralData& d, const std::string& config_hash) {
    nlohmann::json j = spectral_to_json(d);
    j["config_hash"] = config_hash;
    write_text(path, j.dump(1) + "\n");
}

SpectralData read_spectral(const std::filesystem::path& path, std::string* config_hash) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw ProvenanceError(path.string() + ": " + e.what());
    }
    if (config_hash) *config_hash = j.value("config_hash", "");
    return spectral_from_json(j);
}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw InvalidParameter("csv: row width does not match the header");
    rows.push_back(std::move(row));
}

std::string csv_number(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

void write_csv(const std::filesystem::path& path, const CsvTable& t) {
    std::ostringstream s;
    for (std::size_t i = 0; i < t.columns.size(); ++i) s << (i ? "," : "") << t.columns[i];
    s << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << r[i];
        s << "\n";
    }
    write_text(path, s.str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidParameter("cannot write " + path.string());
    f << text;
    if (!f) throw InvalidParameter("short write to " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidParameter("cannot open " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

}  // namespace fracspec
