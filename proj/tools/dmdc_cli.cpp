// SPDX-License-Identifier: Apache-2.0
//
// dmdc: fit DMD / DMDc models from snapshot files, generate the synthetic
// example systems, compare spectra and emit frequency-response tables.

#include <cstdio>
#include <map>
#include <numbers>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmdc.hpp"

namespace fs = std::filesystem;
using namespace dmdc;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kFormat = 2, kNumerical = 3 };

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::TruncationOrder: return kUsage;
    case ErrorKind::Format:
    case ErrorKind::Parse:
    case ErrorKind::Length:
    case ErrorKind::Schema:
    case ErrorKind::Io:
    case ErrorKind::Shape:
    case ErrorKind::InsufficientData:
    case ErrorKind::InvalidInput: return kFormat;
    case ErrorKind::DegenerateMatrix:
    case ErrorKind::NumericalFailure:
    case ErrorKind::SingularFrequency:
    case ErrorKind::Divergence: return kNumerical;
    }
    return kNumerical;
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TruncationFlags {
    std::optional<Index> rank_p;
    std::optional<Index> rank_r;
    std::optional<double> threshold;

    void add_to(CLI::App& cmd, bool with_p) {
        CLI::Option* thr = cmd.add_option("--svd-threshold", threshold, "Relative singular-value threshold in (0,1)");
        CLI::Option* r = cmd.add_option("--rank-r", rank_r, "Explicit output (state) truncation rank");
        r->excludes(thr);
        if (with_p) {
            CLI::Option* p = cmd.add_option("--rank-p", rank_p, "Explicit input-space truncation rank");
            p->excludes(thr);
        }
    }

    [[nodiscard]] TruncationPolicy policy(const std::optional<Index>& rank) const {
        try {
            if (rank) return TruncationPolicy::rank(*rank);
            if (threshold) return TruncationPolicy::threshold(*threshold);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        return {};
    }
};

struct Inputs {
    std::string traj, x, xp, upsilon, b;
    bool transpose = false;
};

struct Loaded {
    SnapshotMatrix x, xp;
    std::map<std::string, std::string> digests;
};

Loaded load_snapshots(const Inputs& in) {
    Loaded out;
    if (!in.traj.empty()) {
        require(in.x.empty() && in.xp.empty(), ErrorKind::InvalidConfig, "--traj cannot be combined with --x/--xp");
        auto pair = split_trajectory(io::read_matrix(in.traj, in.transpose));
        out.x = std::move(pair.x);
        out.xp = std::move(pair.xp);
        out.digests["traj"] = io::file_digest(in.traj);
    } else {
        if (in.x.empty() || in.xp.empty()) throw UsageError("either --traj or both --x and --xp are required");
        out.x = io::read_matrix(in.x, in.transpose);
        out.xp = io::read_matrix(in.xp, in.transpose);
        out.digests["x"] = io::file_digest(in.x);
        out.digests["xp"] = io::file_digest(in.xp);
    }
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string eigenvalue_table(const ComplexVector& values) {
    std::string out = "re,im,magnitude\n";
    for (Index i = 0; i < values.size(); ++i)
        out += format_double(values(i).real()) + "," + format_double(values(i).imag()) + "," +
               format_double(std::abs(values(i))) + "\n";
    return out;
}

void write_text(io::OutputTransaction& tx, const fs::path& dest, const std::string& text) {
    io::detail::write_file(tx.stage(dest), text);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
}

// ----------------------------------------------------------------------------

int cmd_fit(const Inputs& in, const TruncationFlags& trunc, double dt, bool normalize, const std::string& out_dir) {
    const Loaded data = load_snapshots(in);
    DmdOptions opts;
    opts.normalize_modes = normalize;
    const TruncationPolicy policy = trunc.policy(trunc.rank_r);
    const DmdModel model = dmd_fit(data.x, data.xp, policy, dt, opts);

    io::ModelRecord rec = io::to_record(model);
    rec.provenance.input_digests = data.digests;
    rec.provenance.truncation = "r=" + policy.describe();

    ensure_dir(out_dir);
    io::OutputTransaction tx;
    io::write_model(rec, tx.stage(fs::path(out_dir) / "model.json"));
    const std::string table = eigenvalue_table(model.eigen.values);
    write_text(tx, fs::path(out_dir) / "eigenvalues.csv", table);
    tx.commit();

    std::cout << "rank " << model.rank << "\n" << table;
    return kOk;
}

int cmd_fitc(const Inputs& in, const TruncationFlags& trunc, double dt, bool normalize, const std::string& out_dir) {
    if (trunc.rank_p && trunc.rank_r && *trunc.rank_p < *trunc.rank_r)
        throw UsageError("--rank-p (" + std::to_string(*trunc.rank_p) + ") must be >= --rank-r (" +
                         std::to_string(*trunc.rank_r) + ")");
    if (in.upsilon.empty()) throw UsageError("--upsilon is required");

    Loaded data = load_snapshots(in);
    const ControlMatrix upsilon = io::read_matrix(in.upsilon, in.transpose);
    data.digests["upsilon"] = io::file_digest(in.upsilon);

    DmdcOptions opts;
    opts.normalize_modes = normalize;
    DmdcModel model;
    IdentifiabilityReport report;
    std::string truncation;
    if (!in.b.empty()) {
        const Matrix b = io::read_matrix(in.b);
        data.digests["b"] = io::file_digest(in.b);
        const TruncationPolicy policy = trunc.policy(trunc.rank_r);
        model = dmdc_fit_known_b(data.x, data.xp, upsilon, b, policy, dt, opts);
        report = check_identifiability(data.x, upsilon);
        truncation = "r=" + policy.describe();
    } else {
        const TruncationPolicy p = trunc.policy(trunc.rank_p);
        const TruncationPolicy r = trunc.policy(trunc.rank_r);
        DmdcFit fit = dmdc_fit_unknown_b(data.x, data.xp, upsilon, p, r, dt, opts);
        model = std::move(fit.model);
        report = fit.report;
        truncation = "p=" + p.describe() + ";r=" + r.describe();
    }

    io::ModelRecord rec = io::to_record(model);
    rec.provenance.input_digests = data.digests;
    rec.provenance.truncation = truncation;

    ensure_dir(out_dir);
    io::OutputTransaction tx;
    io::write_model(rec, tx.stage(fs::path(out_dir) / "model.json"));
    const std::string table = eigenvalue_table(model.eigen.values);
    write_text(tx, fs::path(out_dir) / "eigenvalues.csv", table);
    io::write_matrix_csv(model.b_tilde, tx.stage(fs::path(out_dir) / "b_tilde.csv"));
    tx.commit();

    std::cout << "ranks p=" << model.input_rank << " r=" << model.output_rank << "\n";
    std::cout << "identifiability omega_rank=" << report.omega_rank << " required_rank=" << report.required_rank
              << " collinear=" << (report.collinearity_flag ? "true" : "false") << "\n";
    if (report.collinearity_flag)
        std::cerr << "warning: collinear input-state data; A and B are not separately identifiable\n";
    std::cout << table;
    std::cout << "b_tilde\n" << io::format_matrix_csv(model.b_tilde);
    return kOk;
}

struct SynthFlags {
    int example = 1;
    std::uint64_t seed = 0;
    std::optional<Index> snapshots;
    std::vector<double> x0{4.0, 7.0};
    double gain = -1.0;
    Index states = 5, inputs = 2, outputs = 100;
    Index grid = 128, modes = 5;
    std::string actuation;
    double noise = 0.0;
    std::string format = "csv";
};

int cmd_synth(const SynthFlags& f, const std::string& out_dir) {
    SynthDataset ds;
    switch (f.example) {
    case 1: {
        if (f.x0.size() != 2) throw UsageError("--x0 needs exactly two values");
        ds = gen_example1(Vector::Map(f.x0.data(), 2), f.gain, f.snapshots.value_or(5));
        break;
    }
    case 2: ds = gen_example2(f.states, f.inputs, f.outputs, f.snapshots.value_or(200), f.seed); break;
    case 3: {
        SparseFourierConfig cfg;
        cfg.grid = f.grid;
        cfg.n_modes = f.modes;
        cfg.m = f.snapshots.value_or(60);
        cfg.seed = f.seed;
        if (!f.actuation.empty()) cfg.actuation = io::read_actuation(f.actuation);
        ds = gen_sparse_fourier(cfg);
        break;
    }
    default: throw UsageError("--example must be 1, 2 or 3");
    }
    if (f.noise > 0.0) ds = add_noise(std::move(ds), f.noise, f.seed);

    const std::string ext = f.format == "bin" ? ".bin" : ".csv";
    ensure_dir(out_dir);
    io::OutputTransaction tx;
    io::write_matrix(ds.x, tx.stage(fs::path(out_dir) / ("x" + ext)));
    io::write_matrix(ds.xp, tx.stage(fs::path(out_dir) / ("xp" + ext)));
    io::write_matrix(ds.upsilon, tx.stage(fs::path(out_dir) / ("upsilon" + ext)));
    io::write_truth(ds.truth, tx.stage(fs::path(out_dir) / "truth.json"));
    tx.commit();
    std::cout << "example " << f.example << ": state dimension " << ds.x.rows() << ", " << ds.x.cols()
              << " snapshot pairs, " << ds.upsilon.rows() << " inputs\n";
    return kOk;
}

struct Spectrum {
    ComplexVector values;
    std::optional<ComplexMatrix> modes;
    std::optional<StateSpaceRealization> realization;
};

Spectrum load_spectrum(const std::string& path) {
    Spectrum s;
    if (io::is_truth_document(path)) {
        const GroundTruth truth = io::read_truth(path);
        s.values = truth.eigs_true;
        s.modes = truth.modes_true;
        const Index n = truth.a_true.rows();
        s.realization = StateSpaceRealization{truth.a_true, truth.b_true,
                                              truth.c_true.value_or(Matrix::Identity(n, n)), 1.0};
    } else {
        const io::ModelRecord rec = io::read_model(path);
        s.values = rec.eigenvalues;
        if (rec.modes.size() > 0) s.modes = rec.modes;
        s.realization = io::realize(rec);
    }
    return s;
}

double cosine_similarity(const ComplexVector& a, const ComplexVector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::abs(a.dot(b)) / (na * nb);
}

int cmd_compare(const std::string& first, const std::string& second, bool with_freqresp, const std::string& out) {
    const Spectrum a = load_spectrum(first);
    const Spectrum b = load_spectrum(second);

    std::vector<Index> matching;
    const double distance = spectral_distance(a.values, b.values, &matching);
    std::string csv = "metric,index,value\n";
    csv += "spectral_distance,," + format_double(distance) + "\n";
    for (Index i = 0; i < a.values.size(); ++i)
        csv += "eigen_error," + std::to_string(i) + "," +
               format_double(std::abs(a.values(i) - b.values(matching[static_cast<std::size_t>(i)]))) + "\n";
    if (a.modes && b.modes && a.modes->rows() == b.modes->rows()) {
        for (Index i = 0; i < a.values.size(); ++i)
            csv += "mode_cosine," + std::to_string(i) + "," +
                   format_double(cosine_similarity(a.modes->col(i), b.modes->col(matching[static_cast<std::size_t>(i)]))) +
                   "\n";
    }
    if (with_freqresp) {
        require(a.realization->inputs() > 0 && b.realization->inputs() > 0, ErrorKind::Shape,
                "compare --freqresp: both systems need inputs");
        const auto grid = default_frequency_grid();
        const FrequencyResponseCurve ca = frequency_response(*a.realization, grid);
        const FrequencyResponseCurve cb = frequency_response(*b.realization, grid);
        double gap = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            require(ca.sigmas[k].size() == cb.sigmas[k].size(), ErrorKind::Shape,
                    "compare --freqresp: systems have different input/output counts");
            for (Index j = 0; j < ca.sigmas[k].size(); ++j) {
                const double ref = std::max(std::abs(cb.sigmas[k](j)), 1e-300);
                gap = std::max(gap, std::abs(ca.sigmas[k](j) - cb.sigmas[k](j)) / ref);
            }
        }
        csv += "sigma_max_rel_gap,," + format_double(gap) + "\n";
    }

    if (out.empty()) {
        std::cout << csv;
    } else {
        io::OutputTransaction tx;
        write_text(tx, out, csv);
        tx.commit();
    }
    return kOk;
}

struct FreqFlags {
    std::string model, a, b, c;
    double omega_min = 1e-3;
    double omega_max = std::numbers::pi;
    std::size_t count = 200;
};

int cmd_freqresp(const FreqFlags& f, const std::string& out) {
    StateSpaceRealization ss;
    if (!f.model.empty()) {
        ss = io::realize(io::read_model(f.model));
    } else {
        if (f.a.empty() || f.b.empty()) throw UsageError("either a model file or --a and --b are required");
        ss.a = io::read_matrix(f.a);
        ss.b = io::read_matrix(f.b);
        ss.c = f.c.empty() ? Matrix(Matrix::Identity(ss.a.rows(), ss.a.rows())) : io::read_matrix(f.c);
    }
    ss.validate();
    require(ss.inputs() >= 1, ErrorKind::InvalidInput, "freqresp: model has no inputs");

    const auto grid = default_frequency_grid(f.count, f.omega_min, f.omega_max);
    const ComplexVector poles = eig(ss.a).values;
    const Index width = std::min(ss.outputs(), ss.inputs());
    std::string csv = "omega";
    for (Index j = 0; j < width; ++j) csv += ",sigma" + std::to_string(j + 1);
    csv += "\n";
    std::size_t singular = 0;
    for (const double w : grid) {
        csv += format_double(w);
        try {
            const Vector s = transfer_singular_values(ss, w, poles);
            for (Index j = 0; j < width; ++j) csv += "," + format_double(s(j));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SingularFrequency) throw;
            csv += ",singular";
            ++singular;
        }
        csv += "\n";
    }
    if (singular) std::cerr << "warning: " << singular << " grid point(s) coincide with poles\n";

    if (out.empty()) {
        std::cout << csv;
    } else {
        io::OutputTransaction tx;
        write_text(tx, out, csv);
        tx.commit();
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic mode decomposition with control"};
    app.require_subcommand(1);

    Inputs inputs;
    TruncationFlags trunc;
    double dt = 1.0;
    bool normalize = false;
    std::string out_dir = ".";

    CLI::App* fit = app.add_subcommand("fit", "Fit a plain DMD model from state snapshots");
    fit->add_option("--traj", inputs.traj, "Trajectory file (columns are snapshots)");
    fit->add_option("--x", inputs.x, "Snapshot matrix X");
    fit->add_option("--xp", inputs.xp, "Shifted snapshot matrix X'");
    trunc.add_to(*fit, false);
    fit->add_option("--dt", dt, "Sampling interval");
    fit->add_flag("--transpose-input", inputs.transpose, "Input files store snapshots as rows");
    fit->add_flag("--normalize-modes", normalize, "Scale modes to unit norm");
    fit->add_option("--out", out_dir, "Output directory");

    TruncationFlags trunc_c;
    CLI::App* fitc = app.add_subcommand("fitc", "Fit a DMD-with-control model");
    fitc->add_option("--traj", inputs.traj, "Trajectory file (columns are snapshots)");
    fitc->add_option("--x", inputs.x, "Snapshot matrix X");
    fitc->add_option("--xp", inputs.xp, "Shifted snapshot matrix X'");
    fitc->add_option("--upsilon", inputs.upsilon, "Control snapshot matrix");
    fitc->add_option("--b-matrix", inputs.b, "Known input matrix B (selects the known-B fit)");
    trunc_c.add_to(*fitc, true);
    fitc->add_option("--dt", dt, "Sampling interval");
    fitc->add_flag("--transpose-input", inputs.transpose, "Input files store snapshots as rows");
    fitc->add_flag("--normalize-modes", normalize, "Scale modes to unit norm");
    fitc->add_option("--out", out_dir, "Output directory");

    SynthFlags synth_flags;
    CLI::App* synth = app.add_subcommand("synth", "Generate one of the example datasets");
    synth->add_option("--example", synth_flags.example, "1: feedback-stabilized 2-state, 2: random MIMO, 3: sparse Fourier")
        ->required()
        ->check(CLI::IsMember({1, 2, 3}));
    synth->add_option("--seed", synth_flags.seed, "Random seed");
    synth->add_option("--snapshots", synth_flags.snapshots, "Number of snapshots m");
    synth->add_option("--x0", synth_flags.x0, "Example 1 initial state")->delimiter(',');
    synth->add_option("--gain", synth_flags.gain, "Example 1 feedback gain");
    synth->add_option("--states", synth_flags.states, "Example 2 latent states")->check(CLI::PositiveNumber);
    synth->add_option("--inputs", synth_flags.inputs, "Example 2 inputs")->check(CLI::PositiveNumber);
    synth->add_option("--outputs", synth_flags.outputs, "Example 2 measurements")->check(CLI::PositiveNumber);
    synth->add_option("--grid", synth_flags.grid, "Example 3 grid size (power of two)");
    synth->add_option("--modes", synth_flags.modes, "Example 3 active Fourier modes");
    synth->add_option("--actuation", synth_flags.actuation, "Example 3 actuation spec (JSON)");
    synth->add_option("--noise", synth_flags.noise, "Gaussian noise standard deviation")->check(CLI::NonNegativeNumber);
    synth->add_option("--format", synth_flags.format, "Snapshot file format")->check(CLI::IsMember({"csv", "bin"}));
    synth->add_option("--out", out_dir, "Output directory");

    std::string cmp_first, cmp_second, cmp_out;
    bool cmp_freq = false;
    CLI::App* compare = app.add_subcommand("compare", "Compare a model with ground truth or another model");
    compare->add_option("model", cmp_first, "Model file")->required();
    compare->add_option("reference", cmp_second, "Truth or second model file")->required();
    compare->add_flag("--freqresp", cmp_freq, "Also compare frequency-response singular values");
    compare->add_option("--out", cmp_out, "Output CSV (default stdout)");

    FreqFlags freq;
    std::string freq_out;
    CLI::App* freqresp = app.add_subcommand("freqresp", "Frequency-response singular values");
    freqresp->add_option("model", freq.model, "Model file");
    freqresp->add_option("--a", freq.a, "State matrix file");
    freqresp->add_option("--b", freq.b, "Input matrix file");
    freqresp->add_option("--c", freq.c, "Output matrix file (default identity)");
    freqresp->add_option("--omega-min", freq.omega_min, "Smallest frequency (rad/sample)");
    freqresp->add_option("--omega-max", freq.omega_max, "Largest frequency (rad/sample)");
    freqresp->add_option("--omega-count", freq.count, "Number of log-spaced frequencies");
    freqresp->add_option("--out", freq_out, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*fit) return cmd_fit(inputs, trunc, dt, normalize, out_dir);
        if (*fitc) return cmd_fitc(inputs, trunc_c, dt, normalize, out_dir);
        if (*synth) return cmd_synth(synth_flags, out_dir);
        if (*compare) return cmd_compare(cmp_first, cmp_second, cmp_freq, cmp_out);
        if (*freqresp) return cmd_freqresp(freq, freq_out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFormat;
    }
    return kUsage;
}
