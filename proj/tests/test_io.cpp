// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "dmdc/io.hpp"
#include "oracles.hpp"

using namespace dmdc;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("dmdc_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void put(const std::string& name, const std::string& text) const {
        std::ofstream(path(name), std::ios::binary) << text;
    }

    fs::path dir_;
};

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorKind::InvalidInput;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool bitwise_equal(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(Complex) * static_cast<std::size_t>(a.size())) == 0;
}

} // namespace

TEST(Csv, ParsesRowsAsStates) {
    const Matrix m = io::parse_matrix_csv("1,2,3\n4, 5 ,6\r\n\n");
    Matrix want(2, 3);
    want << 1, 2, 3, 4, 5, 6;
    EXPECT_EQ(m, want);
    EXPECT_EQ(io::parse_matrix_csv("+1e-3,-2.5").cols(), 2);
}

TEST(Csv, RejectsRaggedRowsWithLineNumber) {
    try {
        io::parse_matrix_csv("1,2\n3\n", "x.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Format);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    EXPECT_EQ(kind_of([] { io::parse_matrix_csv(""); }), ErrorKind::Format);
}

TEST(Csv, RejectsNonNumericCellWithPosition) {
    try {
        io::parse_matrix_csv("1,2\n3,abc\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("(2, 2)"), std::string::npos);
    }
    EXPECT_EQ(kind_of([] { io::parse_matrix_csv("1,nan"); }), ErrorKind::Parse);
    EXPECT_EQ(kind_of([] { io::parse_matrix_csv("1,,2"); }), ErrorKind::Parse);
}

TEST(Csv, ShortestFormattingRoundTripsExactly) {
    std::mt19937_64 rng(4);
    const Matrix m = oracle::random_matrix(7, 9, rng) * 1e-7;
    EXPECT_TRUE(bitwise_equal(io::parse_matrix_csv(io::format_matrix_csv(m)), m));
    Matrix special(1, 3);
    special << std::numeric_limits<double>::denorm_min(), -0.0, 0.1;
    EXPECT_TRUE(bitwise_equal(io::parse_matrix_csv(io::format_matrix_csv(special)), special));
}

TEST_F(IoTest, MissingFileNamesPath) {
    try {
        io::read_matrix(path("absent.csv"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
        EXPECT_NE(std::string(e.what()).find("absent.csv"), std::string::npos);
    }
}

TEST_F(IoTest, TransposeOnRead) {
    put("t.csv", "1,2\n3,4\n5,6\n");
    const Matrix m = io::read_matrix(path("t.csv"), true);
    EXPECT_EQ(m.rows(), 2);
    EXPECT_EQ(m(1, 2), 6.0);
}

TEST(Binary, HeaderLayout) {
    Matrix one(1, 1);
    one << 1.0;
    const std::string bytes = io::encode_matrix_bin(one);
    ASSERT_EQ(bytes.size(), 32u);
    EXPECT_EQ(bytes.substr(0, 8), "DMDCMAT1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1u); // little-endian row count
    EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 1u);
    EXPECT_EQ(io::encode_matrix_bin(Matrix(3, 0)).size(), 24u);
}

TEST_F(IoTest, BinaryRoundTripIsBitwise) {
    std::mt19937_64 rng(8);
    const Matrix m = oracle::random_matrix(13, 5, rng);
    io::write_matrix(m, path("m.bin"));
    EXPECT_EQ(fs::file_size(path("m.bin")), 24u + 8u * 65u);
    EXPECT_TRUE(bitwise_equal(io::read_matrix(path("m.bin")), m));
    io::write_matrix(m, path("m.csv"));
    EXPECT_TRUE(bitwise_equal(io::read_matrix(path("m.csv")), m));
}

TEST(Binary, CorruptInputs) {
    Matrix m = Matrix::Ones(2, 2);
    std::string bytes = io::encode_matrix_bin(m);
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_EQ(kind_of([&] { io::decode_matrix_bin(bad_magic); }), ErrorKind::Format);
    EXPECT_EQ(kind_of([&] { io::decode_matrix_bin(bytes.substr(0, bytes.size() - 1)); }), ErrorKind::Length);
    EXPECT_EQ(kind_of([&] { io::decode_matrix_bin(bytes.substr(0, 12)); }), ErrorKind::Length);
    EXPECT_EQ(kind_of([&] { io::decode_matrix_bin(bytes + std::string(8, '\0')); }), ErrorKind::Length);
    std::string huge = bytes;
    for (int i = 8; i < 24; ++i) huge[static_cast<std::size_t>(i)] = '\xff';
    EXPECT_EQ(kind_of([&] { io::decode_matrix_bin(huge); }), ErrorKind::Length);
}

TEST(Digest, KnownVector) {
    EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(IoTest, ModelRoundTripIsBitwise) {
    std::mt19937_64 rng(15);
    const Matrix x = oracle::random_matrix(9, 30, rng);
    const Matrix u = oracle::random_matrix(2, 30, rng);
    const Matrix xp = oracle::random_dynamics(9, 0.9, rng) * x + oracle::random_matrix(9, 2, rng) * u;
    const DmdcFit fit = dmdc_fit_unknown_b(x, xp, u, TruncationPolicy::rank(11), TruncationPolicy::rank(9), 0.25);

    io::ModelRecord rec = io::to_record(fit.model);
    rec.provenance.input_digests = {{"x", io::sha256_hex("x")}};
    rec.provenance.truncation = "p=11 r=9";
    rec.provenance.seed = 12;
    io::write_model(rec, path("model.json"));
    const io::ModelRecord back = io::read_model(path("model.json"));

    EXPECT_EQ(back.kind, io::ModelKind::DmdcUnknownB);
    EXPECT_EQ(back.input_rank, 11);
    EXPECT_EQ(back.output_rank, 9);
    EXPECT_EQ(back.dt, 0.25);
    EXPECT_TRUE(bitwise_equal(back.a_tilde, rec.a_tilde));
    EXPECT_TRUE(bitwise_equal(back.b_tilde, rec.b_tilde));
    EXPECT_TRUE(bitwise_equal(back.basis, rec.basis));
    EXPECT_TRUE(bitwise_equal(ComplexMatrix(back.eigenvalues), ComplexMatrix(rec.eigenvalues)));
    EXPECT_TRUE(bitwise_equal(back.modes, rec.modes));
    EXPECT_EQ(back.provenance, rec.provenance);
}

TEST_F(IoTest, FeedbackModelFileShowsTrueSpectrum) {
    Vector x0(2);
    x0 << 4, 7;
    const SynthDataset ds = gen_example1(x0);
    io::write_model(io::to_record(dmdc_fit_known_b(ds.x, ds.xp, ds.upsilon, ds.truth.b_true)), path("m.json"));
    const io::ModelRecord rec = io::read_model(path("m.json"));
    ASSERT_EQ(rec.eigenvalues.size(), 2);
    EXPECT_NEAR(rec.eigenvalues(0).real(), 1.5, 1e-12);
    EXPECT_NEAR(rec.eigenvalues(1).real(), 0.1, 1e-12);
    std::ifstream in(path("m.json"));
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_NE(text.find("\"dmdc-known-b\""), std::string::npos);
}

TEST_F(IoTest, SchemaViolations) {
    put("empty.json", "");
    EXPECT_EQ(kind_of([&] { io::read_model(path("empty.json")); }), ErrorKind::Schema);

    io::json doc = io::model_to_json(io::to_record(dmd_fit(Matrix::Identity(2, 2), Matrix::Identity(2, 2))));
    doc["kind"] = "koopman";
    EXPECT_EQ(kind_of([&] { io::model_from_json(doc); }), ErrorKind::Schema);
    doc["kind"] = "dmd";
    doc.erase("a_tilde");
    EXPECT_EQ(kind_of([&] { io::model_from_json(doc); }), ErrorKind::Schema);
    EXPECT_EQ(kind_of([&] { io::model_from_json(io::json::array()); }), ErrorKind::Schema);
}

TEST_F(IoTest, TruthRoundTrip) {
    SparseFourierConfig cfg;
    cfg.grid = 16;
    cfg.n_modes = 2;
    cfg.m = 10;
    const SynthDataset ds = gen_sparse_fourier(cfg);
    io::write_truth(ds.truth, path("truth.json"));
    EXPECT_TRUE(io::is_truth_document(path("truth.json")));
    const GroundTruth back = io::read_truth(path("truth.json"));
    EXPECT_TRUE(bitwise_equal(back.a_true, ds.truth.a_true));
    ASSERT_TRUE(back.c_true && back.modes_true);
    EXPECT_TRUE(bitwise_equal(*back.c_true, *ds.truth.c_true));
    EXPECT_TRUE(bitwise_equal(*back.modes_true, *ds.truth.modes_true));
}

TEST_F(IoTest, OutputTransactionCommitsOrCleansUp) {
    {
        io::OutputTransaction tx;
        const fs::path staged = tx.stage(path("a.csv"));
        EXPECT_EQ(staged.extension(), ".csv");
        io::write_matrix(Matrix::Ones(1, 1), staged);
    }
    EXPECT_FALSE(fs::exists(path("a.csv")));
    EXPECT_TRUE(fs::is_empty(dir_));

    io::OutputTransaction tx;
    io::write_matrix(Matrix::Ones(1, 1), tx.stage(path("b.bin")));
    tx.commit();
    EXPECT_EQ(io::read_matrix(path("b.bin"))(0, 0), 1.0);
    EXPECT_EQ(std::distance(fs::directory_iterator(dir_), fs::directory_iterator{}), 1);
}
