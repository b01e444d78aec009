// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "dmdc/controlled.hpp"
#include "dmdc/dmd.hpp"
#include "dmdc/linalg.hpp"
#include "dmdc/synth.hpp"

namespace dmdc::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Text matrices: one row per line, comma-separated; columns are snapshots.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(static_cast<bool>(out), ErrorKind::Io, "short write to '" + path.string() + "'");
}

inline std::string shortest(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

} // namespace detail

inline Matrix parse_matrix_csv(std::string_view text, const std::string& origin = "<memory>") {
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        line = detail::trim(line);
        if (line.empty()) continue;

        std::vector<double> row;
        std::size_t col = 0;
        while (true) {
            const auto comma = line.find(',');
            const std::string_view cell = detail::trim(line.substr(0, comma));
            ++col;
            double value = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (!cell.empty() && *first == '+') ++first;
            const auto res = std::from_chars(first, last, value);
            require(!cell.empty() && res.ec == std::errc{} && res.ptr == last && std::isfinite(value),
                    ErrorKind::Parse,
                    origin + ": cell (" + std::to_string(rows.size() + 1) + ", " + std::to_string(col) +
                        ") at line " + std::to_string(line_no) + " is not a finite number: '" + std::string(cell) +
                        "'");
            row.push_back(value);
            if (comma == std::string_view::npos) break;
            line = line.substr(comma + 1);
        }
        if (!rows.empty())
            require(row.size() == rows.front().size(), ErrorKind::Format,
                    origin + ": line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                        " cells, expected " + std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), ErrorKind::Format, origin + ": no matrix rows");

    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

inline std::string format_matrix_csv(const Matrix& m) {
    std::string out;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += detail::shortest(m(i, j));
        }
        out += '\n';
    }
    return out;
}

inline Matrix read_matrix_csv(const fs::path& path) {
    return parse_matrix_csv(detail::read_file(path), path.string());
}

inline void write_matrix_csv(const Matrix& m, const fs::path& path) { detail::write_file(path, format_matrix_csv(m)); }

// ---------------------------------------------------------------------------
// Binary matrices: "DMDCMAT1", rows and cols as u64 LE, column-major f64 LE.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kMatrixMagic = "DMDCMAT1";
inline constexpr std::size_t kMatrixHeaderBytes = 24;

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

} // namespace detail

inline std::string encode_matrix_bin(const Matrix& m) {
    std::string out(kMatrixMagic);
    detail::put_u64(out, static_cast<std::uint64_t>(m.rows()));
    detail::put_u64(out, static_cast<std::uint64_t>(m.cols()));
    out.reserve(kMatrixHeaderBytes + 8 * static_cast<std::size_t>(m.size()));
    for (Index k = 0; k < m.size(); ++k) detail::put_u64(out, std::bit_cast<std::uint64_t>(m.data()[k]));
    return out;
}

inline Matrix decode_matrix_bin(std::string_view bytes, const std::string& origin = "<memory>") {
    require(bytes.size() >= kMatrixMagic.size() && bytes.substr(0, kMatrixMagic.size()) == kMatrixMagic,
            ErrorKind::Format, origin + ": bad magic, not a DMDCMAT1 matrix file");
    require(bytes.size() >= kMatrixHeaderBytes, ErrorKind::Length, origin + ": truncated header");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint64_t rows = detail::get_u64(p + 8);
    const std::uint64_t cols = detail::get_u64(p + 16);
    const std::uint64_t payload = bytes.size() - kMatrixHeaderBytes;
    const bool consistent = cols == 0 ? payload == 0 : (rows <= payload / 8 / cols && rows * cols * 8 == payload);
    require(consistent, ErrorKind::Length,
            origin + ": header declares " + std::to_string(rows) + "x" + std::to_string(cols) + " but payload has " +
                std::to_string(payload) + " bytes");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index k = 0; k < m.size(); ++k)
        m.data()[k] = std::bit_cast<double>(detail::get_u64(p + kMatrixHeaderBytes + 8 * static_cast<std::size_t>(k)));
    return m;
}

inline Matrix read_matrix_bin(const fs::path& path) { return decode_matrix_bin(detail::read_file(path), path.string()); }

inline void write_matrix_bin(const Matrix& m, const fs::path& path) { detail::write_file(path, encode_matrix_bin(m)); }

/// Dispatch on extension: ".bin" is binary, anything else is CSV.
inline Matrix read_matrix(const fs::path& path, bool transpose = false) {
    require(fs::exists(path), ErrorKind::Io, "no such file: '" + path.string() + "'");
    Matrix m = path.extension() == ".bin" ? read_matrix_bin(path) : read_matrix_csv(path);
    if (transpose) m.transposeInPlace();
    return m;
}

inline void write_matrix(const Matrix& m, const fs::path& path) {
    if (path.extension() == ".bin")
        write_matrix_bin(m, path);
    else
        write_matrix_csv(m, path);
}

inline std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    require(EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) == 1, ErrorKind::Io,
            "sha256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

inline std::string file_digest(const fs::path& path) { return sha256_hex(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Structured documents. Each number is a [decimal, hexfloat] pair; the hex
// half is authoritative on read so round-trips are bitwise.
// ---------------------------------------------------------------------------

namespace detail {

inline json encode_number(double v) {
    char hex[64];
    std::snprintf(hex, sizeof hex, "%a", v);
    return json::array({shortest(v), std::string(hex)});
}

inline double decode_number(const json& j, std::string_view where) {
    require(j.is_array() && j.size() == 2 && j[1].is_string(), ErrorKind::Schema,
            std::string(where) + ": expected a [decimal, hex] number pair");
    const std::string& s = j[1].get_ref<const std::string&>();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    require(end == s.c_str() + s.size() && !s.empty(), ErrorKind::Schema,
            std::string(where) + ": malformed hex float '" + s + "'");
    return v;
}

inline json encode_matrix(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(encode_number(m(i, j)));
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

inline Matrix decode_matrix(const json& j, std::string_view where) {
    require(j.is_object() && j.contains("rows") && j.contains("cols") && j.contains("data"), ErrorKind::Schema,
            std::string(where) + ": expected {rows, cols, data}");
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const json& data = j.at("data");
    require(rows >= 0 && cols >= 0 && data.is_array() && static_cast<Index>(data.size()) == rows, ErrorKind::Schema,
            std::string(where) + ": row count does not match declared rows");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = data[static_cast<std::size_t>(i)];
        require(row.is_array() && static_cast<Index>(row.size()) == cols, ErrorKind::Schema,
                std::string(where) + ": row " + std::to_string(i) + " has the wrong length");
        for (Index c = 0; c < cols; ++c) m(i, c) = decode_number(row[static_cast<std::size_t>(c)], where);
    }
    return m;
}

inline json encode_complex_vector(const ComplexVector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i)
        out.push_back(json{{"re", encode_number(v(i).real())}, {"im", encode_number(v(i).imag())}});
    return out;
}

inline ComplexVector decode_complex_vector(const json& j, std::string_view where) {
    require(j.is_array(), ErrorKind::Schema, std::string(where) + ": expected an array of {re, im}");
    ComplexVector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        require(j[i].is_object() && j[i].contains("re") && j[i].contains("im"), ErrorKind::Schema,
                std::string(where) + ": expected {re, im}");
        v(static_cast<Index>(i)) = Complex(decode_number(j[i]["re"], where), decode_number(j[i]["im"], where));
    }
    return v;
}

inline json encode_complex_matrix(const ComplexMatrix& m) {
    return json{{"re", encode_matrix(m.real())}, {"im", encode_matrix(m.imag())}};
}

inline ComplexMatrix decode_complex_matrix(const json& j, std::string_view where) {
    require(j.is_object() && j.contains("re") && j.contains("im"), ErrorKind::Schema,
            std::string(where) + ": expected {re, im}");
    const Matrix re = decode_matrix(j["re"], where);
    const Matrix im = decode_matrix(j["im"], where);
    require(re.rows() == im.rows() && re.cols() == im.cols(), ErrorKind::Schema,
            std::string(where) + ": real and imaginary parts differ in shape");
    ComplexMatrix m(re.rows(), re.cols());
    m.real() = re;
    m.imag() = im;
    return m;
}

inline json parse_document(std::string_view text, const std::string& origin) {
    require(!detail::trim(text).empty(), ErrorKind::Schema, origin + ": empty document");
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Schema, origin + ": " + e.what());
    }
}

inline const json& field(const json& doc, const char* key, const std::string& origin) {
    require(doc.is_object() && doc.contains(key), ErrorKind::Schema, origin + ": missing field '" + key + "'");
    return doc.at(key);
}

} // namespace detail

enum class ModelKind { Dmd, DmdcKnownB, DmdcUnknownB };

constexpr std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
    case ModelKind::Dmd: return "dmd";
    case ModelKind::DmdcKnownB: return "dmdc-known-b";
    case ModelKind::DmdcUnknownB: return "dmdc-unknown-b";
    }
    return "dmd";
}

inline ModelKind parse_model_kind(std::string_view tag) {
    if (tag == "dmd") return ModelKind::Dmd;
    if (tag == "dmdc-known-b") return ModelKind::DmdcKnownB;
    if (tag == "dmdc-unknown-b") return ModelKind::DmdcUnknownB;
    fail(ErrorKind::Schema, "unknown model kind '" + std::string(tag) + "'");
}

struct Provenance {
    std::map<std::string, std::string> input_digests; // role -> sha256
    std::string truncation;
    std::optional<std::uint64_t> seed;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ModelRecord {
    ModelKind kind = ModelKind::Dmd;
    Index input_rank = 0;  // p
    Index output_rank = 0; // r
    double dt = 1.0;
    Matrix a_tilde;
    Matrix b_tilde;
    Matrix basis;
    ComplexVector eigenvalues;
    ComplexMatrix modes;
    Provenance provenance;
};

inline ModelRecord to_record(const DmdModel& model) {
    return {ModelKind::Dmd, model.rank, model.rank, model.dt, model.a_tilde, Matrix(model.rank, 0),
            model.basis, model.eigen.values, model.modes, {}};
}

inline ModelRecord to_record(const DmdcModel& model) {
    const ModelKind kind =
        model.variant == DmdcVariant::KnownInputMap ? ModelKind::DmdcKnownB : ModelKind::DmdcUnknownB;
    return {kind, model.input_rank, model.output_rank, model.dt, model.a_tilde, model.b_tilde,
            model.basis, model.eigen.values, model.modes, {}};
}

inline StateSpaceRealization realize(const ModelRecord& record) {
    StateSpaceRealization ss{record.a_tilde, record.b_tilde, record.basis, record.dt};
    ss.validate();
    return ss;
}

inline json model_to_json(const ModelRecord& rec) {
    json prov{{"input_digests", rec.provenance.input_digests}, {"truncation", rec.provenance.truncation}};
    prov["seed"] = rec.provenance.seed ? json(*rec.provenance.seed) : json(nullptr);
    return json{{"format", "dmdc-model"},
                {"version", 1},
                {"kind", std::string(to_string(rec.kind))},
                {"ranks", {{"p", rec.input_rank}, {"r", rec.output_rank}}},
                {"dt", detail::encode_number(rec.dt)},
                {"a_tilde", detail::encode_matrix(rec.a_tilde)},
                {"b_tilde", detail::encode_matrix(rec.b_tilde)},
                {"basis", detail::encode_matrix(rec.basis)},
                {"eigenvalues", detail::encode_complex_vector(rec.eigenvalues)},
                {"modes", detail::encode_complex_matrix(rec.modes)},
                {"provenance", std::move(prov)}};
}

inline ModelRecord model_from_json(const json& doc, const std::string& origin = "<memory>") {
    require(doc.is_object(), ErrorKind::Schema, origin + ": model document must be an object");
    require(doc.value("format", std::string{}) == "dmdc-model", ErrorKind::Schema,
            origin + ": not a dmdc-model document");
    const json& kind = detail::field(doc, "kind", origin);
    require(kind.is_string(), ErrorKind::Schema, origin + ": kind must be a string");

    ModelRecord rec;
    rec.kind = parse_model_kind(kind.get<std::string>());
    try {
        const json& ranks = detail::field(doc, "ranks", origin);
        rec.input_rank = ranks.at("p").get<Index>();
        rec.output_rank = ranks.at("r").get<Index>();
        const json& prov = detail::field(doc, "provenance", origin);
        rec.provenance.input_digests = prov.at("input_digests").get<std::map<std::string, std::string>>();
        rec.provenance.truncation = prov.at("truncation").get<std::string>();
        if (prov.contains("seed") && !prov.at("seed").is_null()) rec.provenance.seed = prov.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Schema, origin + ": " + e.what());
    }
    rec.dt = detail::decode_number(detail::field(doc, "dt", origin), "dt");
    rec.a_tilde = detail::decode_matrix(detail::field(doc, "a_tilde", origin), "a_tilde");
    rec.b_tilde = detail::decode_matrix(detail::field(doc, "b_tilde", origin), "b_tilde");
    rec.basis = detail::decode_matrix(detail::field(doc, "basis", origin), "basis");
    rec.eigenvalues = detail::decode_complex_vector(detail::field(doc, "eigenvalues", origin), "eigenvalues");
    rec.modes = detail::decode_complex_matrix(detail::field(doc, "modes", origin), "modes");
    return rec;
}

inline void write_model(const ModelRecord& rec, const fs::path& path) {
    detail::write_file(path, model_to_json(rec).dump(1) + "\n");
}

inline ModelRecord read_model(const fs::path& path) {
    return model_from_json(detail::parse_document(detail::read_file(path), path.string()), path.string());
}

// Ground truth documents share the number encoding.

inline json truth_to_json(const GroundTruth& truth) {
    json doc{{"format", "dmdc-truth"},
             {"version", 1},
             {"seed", truth.seed},
             {"a_true", detail::encode_matrix(truth.a_true)},
             {"b_true", detail::encode_matrix(truth.b_true)},
             {"eigenvalues", detail::encode_complex_vector(truth.eigs_true)}};
    doc["c_true"] = truth.c_true ? detail::encode_matrix(*truth.c_true) : json(nullptr);
    doc["modes"] = truth.modes_true ? detail::encode_complex_matrix(*truth.modes_true) : json(nullptr);
    return doc;
}

inline GroundTruth truth_from_json(const json& doc, const std::string& origin = "<memory>") {
    require(doc.is_object() && doc.value("format", std::string{}) == "dmdc-truth", ErrorKind::Schema,
            origin + ": not a dmdc-truth document");
    GroundTruth truth;
    try {
        truth.seed = detail::field(doc, "seed", origin).get<std::uint64_t>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Schema, origin + ": " + e.what());
    }
    truth.a_true = detail::decode_matrix(detail::field(doc, "a_true", origin), "a_true");
    truth.b_true = detail::decode_matrix(detail::field(doc, "b_true", origin), "b_true");
    truth.eigs_true = detail::decode_complex_vector(detail::field(doc, "eigenvalues", origin), "eigenvalues");
    if (doc.contains("c_true") && !doc["c_true"].is_null()) truth.c_true = detail::decode_matrix(doc["c_true"], "c_true");
    if (doc.contains("modes") && !doc["modes"].is_null())
        truth.modes_true = detail::decode_complex_matrix(doc["modes"], "modes");
    return truth;
}

inline void write_truth(const GroundTruth& truth, const fs::path& path) {
    detail::write_file(path, truth_to_json(truth).dump(1) + "\n");
}

inline GroundTruth read_truth(const fs::path& path) {
    return truth_from_json(detail::parse_document(detail::read_file(path), path.string()), path.string());
}

/// True when the file at `path` holds a truth document rather than a model.
inline bool is_truth_document(const fs::path& path) {
    const json doc = detail::parse_document(detail::read_file(path), path.string());
    return doc.is_object() && doc.value("format", std::string{}) == "dmdc-truth";
}

inline json actuation_to_json(const ActuationSpec& spec) {
    return json{{"center_x", spec.center_x}, {"center_y", spec.center_y}, {"width", spec.width},
                {"amplitude", spec.amplitude}};
}

inline ActuationSpec actuation_from_json(const json& j) {
    require(j.is_object(), ErrorKind::Schema, "actuation: expected an object");
    ActuationSpec spec;
    try {
        spec.center_x = j.value("center_x", spec.center_x);
        spec.center_y = j.value("center_y", spec.center_y);
        spec.width = j.value("width", spec.width);
        spec.amplitude = j.value("amplitude", spec.amplitude);
    } catch (const json::exception& e) {
        fail(ErrorKind::Schema, std::string("actuation: ") + e.what());
    }
    return spec;
}

inline ActuationSpec read_actuation(const fs::path& path) {
    return actuation_from_json(detail::parse_document(detail::read_file(path), path.string()));
}

/// Stages output files next to their destinations and renames them into
/// place on commit(). Uncommitted staging files are removed on destruction.
class OutputTransaction {
public:
    OutputTransaction() = default;
    OutputTransaction(const OutputTransaction&) = delete;
    OutputTransaction& operator=(const OutputTransaction&) = delete;

    ~OutputTransaction() {
        std::error_code ec;
        for (const auto& [tmp, dest] : staged_) fs::remove(tmp, ec);
    }

    /// Path to write instead of `dest`; keeps the extension so format dispatch still works.
    fs::path stage(const fs::path& dest) {
        fs::path tmp = dest;
        tmp.replace_filename("." + dest.stem().string() + ".partial" + dest.extension().string());
        staged_.emplace_back(tmp, dest);
        return tmp;
    }

    void commit() {
        for (const auto& [tmp, dest] : staged_) {
            std::error_code ec;
            fs::rename(tmp, dest, ec);
            require(!ec, ErrorKind::Io, "cannot move '" + tmp.string() + "' to '" + dest.string() + "': " + ec.message());
        }
        staged_.clear();
    }

private:
    std::vector<std::pair<fs::path, fs::path>> staged_;
};

} // namespace dmdc::io
