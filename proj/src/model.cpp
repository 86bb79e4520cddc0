#include "mixkern/model.hpp"

#include "mixkern/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace mixkern::model {

namespace {

constexpr uint64_t kMatrixMagic = 0x4d4b4d4154583031ULL;  // "MKMATX01"

double column_entry(rng::Xoshiro256pp& stream, const EntryDistribution& dist) {
    switch (dist.tag) {
        case EntryDist::Gaussian: return stream.normal();
        case EntryDist::Rademacher: return stream.rademacher();
        case EntryDist::StudentT: return stream.student_t_unit(dist.df);
    }
    return 0.0;
}

}  // namespace

double CovPerturbation::trace(int p) const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::IsoScalar: return alpha * static_cast<double>(p) / std::sqrt(double(p));
        case Kind::Diagonal: return diag.sum();
        case Kind::Dense: return dense.trace();
    }
    return 0.0;
}

double CovPerturbation::frobenius_sq(int p) const {
    (void)p;  // structured kinds carry their own scaling
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::IsoScalar: return alpha * alpha;  // p * (alpha/sqrt p)^2
        case Kind::Diagonal: return diag.squaredNorm();
        case Kind::Dense: return dense.squaredNorm();
    }
    return 0.0;
}

double CovPerturbation::op_norm(int p) const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::IsoScalar: return std::abs(alpha) / std::sqrt(double(p));
        case Kind::Diagonal: return diag.cwiseAbs().maxCoeff();
        case Kind::Dense: {
            Eigen::SelfAdjointEigenSolver<Mat> es(dense, Eigen::EigenvaluesOnly);
            return es.eigenvalues().cwiseAbs().maxCoeff();
        }
    }
    return 0.0;
}

bool CovPerturbation::identity_plus_spd(int p) const {
    switch (kind) {
        case Kind::Zero: return true;
        case Kind::IsoScalar: return 1.0 + alpha / std::sqrt(double(p)) > 0.0;
        case Kind::Diagonal: return (diag.array() + 1.0 > 0.0).all();
        case Kind::Dense: {
            Eigen::SelfAdjointEigenSolver<Mat> es(dense, Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff() > -1.0;
        }
    }
    return false;
}

Vec CovPerturbation::identity_plus_diagonal(int p) const {
    switch (kind) {
        case Kind::Zero: return Vec::Ones(p);
        case Kind::IsoScalar: return Vec::Constant(p, 1.0 + alpha / std::sqrt(double(p)));
        case Kind::Diagonal: return diag.array() + 1.0;
        case Kind::Dense: break;
    }
    throw std::logic_error("identity_plus_diagonal called on a dense descriptor");
}

Mat CovPerturbation::identity_plus_dense(int p) const {
    if (kind == Kind::Dense) return Mat::Identity(p, p) + dense;
    Mat m = Mat::Zero(p, p);
    m.diagonal() = identity_plus_diagonal(p);
    return m;
}

void CovPerturbation::apply_sqrt_identity_plus(int p, const double* x, double* y) const {
    switch (kind) {
        case Kind::Zero:
            std::memcpy(y, x, sizeof(double) * p);
            return;
        case Kind::IsoScalar: {
            const double s = std::sqrt(1.0 + alpha / std::sqrt(double(p)));
            for (int i = 0; i < p; ++i) y[i] = s * x[i];
            return;
        }
        case Kind::Diagonal:
            for (int i = 0; i < p; ++i) y[i] = std::sqrt(1.0 + diag(i)) * x[i];
            return;
        case Kind::Dense: {
            Eigen::SelfAdjointEigenSolver<Mat> es(Mat::Identity(p, p) + dense);
            if (es.eigenvalues().minCoeff() <= 0.0)
                throw std::invalid_argument("I + E is not positive definite");
            const Vec sq = es.eigenvalues().cwiseSqrt();
            Eigen::Map<const Vec> xin(x, p);
            Eigen::Map<Vec> yout(y, p);
            yout = es.eigenvectors() * (sq.asDiagonal() * (es.eigenvectors().transpose() * xin));
            return;
        }
    }
}

void MixtureParams::validate() const {
    if (n <= 0 || p <= 0) throw std::invalid_argument("mixture: n and p must be positive");
    if (n % 2 != 0) throw std::invalid_argument("mixture: n must be even (balanced classes)");
    if (mu1.size() != p || mu2.size() != p)
        throw std::invalid_argument("mixture: means must have dimension p");
    if (!e1.identity_plus_spd(p) || !e2.identity_plus_spd(p))
        throw std::invalid_argument("mixture: I + E must be positive definite");
    if (dist.tag == EntryDist::StudentT && dist.df <= 2)
        throw std::invalid_argument("mixture: Student-t needs df > 2 for unit variance");
}

Dataset sample_mixture(const MixtureParams& params, uint64_t seed) {
    params.validate();
    const int n = params.n;
    const int p = params.p;
    Dataset data;
    data.X.resize(p, n);
    data.Z.resize(p, n);
    data.labels.resize(n);

    // precompute the (I+E)^{1/2} action once per class; dense descriptors
    // get an eigendecomposition here instead of per column
    Mat sqrt_dense[2];
    const CovPerturbation* es[2] = {&params.e1, &params.e2};
    for (int a = 0; a < 2; ++a) {
        if (es[a]->kind == CovPerturbation::Kind::Dense) {
            Eigen::SelfAdjointEigenSolver<Mat> solver(Mat::Identity(p, p) + es[a]->dense);
            if (solver.eigenvalues().minCoeff() <= 0.0)
                throw std::invalid_argument("I + E is not positive definite");
            sqrt_dense[a] = solver.operatorSqrt();
        }
    }

    const int half = n / 2;
#pragma omp parallel for schedule(static)
    for (int col = 0; col < n; ++col) {
        auto stream = rng::Xoshiro256pp::for_stream(seed, static_cast<uint64_t>(col));
        const int cls = col < half ? 0 : 1;
        const Vec& mu = cls == 0 ? params.mu1 : params.mu2;
        const CovPerturbation& e = *es[cls];
        double* z = data.Z.col(col).data();
        double* x = data.X.col(col).data();
        for (int row = 0; row < p; ++row) z[row] = column_entry(stream, params.dist);
        if (e.kind == CovPerturbation::Kind::Dense) {
            data.X.col(col).noalias() = sqrt_dense[cls] * data.Z.col(col);
        } else {
            e.apply_sqrt_identity_plus(p, z, x);
        }
        for (int row = 0; row < p; ++row) x[row] += mu(row);
    }
    for (int col = 0; col < n; ++col) data.labels[col] = col < half ? 1 : 2;
    return data;
}

RegimeReport validate_regime(const MixtureParams& params, double bound) {
    RegimeReport report;
    const double p = params.p;
    const double quarter = std::pow(p, 0.25);
    auto push = [&](const std::string& name, double magnitude) {
        const bool pass = magnitude >= 0.0 && magnitude <= bound;
        report.entries.push_back({name, magnitude, bound, pass});
        report.all_pass = report.all_pass && pass;
    };
    const Vec* mus[2] = {&params.mu1, &params.mu2};
    const CovPerturbation* es[2] = {&params.e1, &params.e2};
    for (int a = 0; a < 2; ++a) {
        const std::string suffix = "_" + std::to_string(a + 1);
        push("mu_norm" + suffix, mus[a]->norm());
        push("e_opnorm_p14" + suffix, es[a]->op_norm(params.p) * quarter);
        push("e_trace_sqrtp" + suffix, std::abs(es[a]->trace(params.p)) / std::sqrt(p));
        push("e_frob_sq_sqrtp" + suffix, es[a]->frobenius_sq(params.p) / std::sqrt(p));
    }
    return report;
}

OracleReport oracle_stats(const MixtureParams& params) {
    params.validate();
    const int p = params.p;
    const Vec dmu = params.mu1 - params.mu2;
    OracleReport report;

    if (params.e1.is_diagonal_like() && params.e2.is_diagonal_like()) {
        const Vec d1 = params.e1.identity_plus_diagonal(p);
        const Vec d2 = params.e2.identity_plus_diagonal(p);
        const Vec ratio = d1.cwiseQuotient(d2);
        report.e_t = ratio.mean() - 1.0 + dmu.cwiseAbs2().cwiseQuotient(d2).sum() / p -
                     (d1.array().log() - d2.array().log()).sum() / p;
        report.v_t = 2.0 / (double(p) * p) * (ratio.array() - 1.0).square().sum() +
                     4.0 / (double(p) * p) *
                         (dmu.array().square() * d1.array() / d2.array().square()).sum();
    } else {
        const Mat c1 = params.e1.identity_plus_dense(p);
        const Mat c2 = params.e2.identity_plus_dense(p);
        Eigen::LLT<Mat> chol2(c2);
        if (chol2.info() != Eigen::Success)
            throw std::invalid_argument("oracle_stats: I + E2 is singular");
        const Mat c2inv = chol2.solve(Mat::Identity(p, p));
        Eigen::SelfAdjointEigenSolver<Mat> es1(c1);
        const Mat c1half = es1.operatorSqrt();
        const Mat middle = c1half * c2inv * c1half - Mat::Identity(p, p);
        const double logdet1 = 2.0 * Eigen::LLT<Mat>(c1).matrixLLT().diagonal().array().log().sum();
        const double logdet2 = 2.0 * chol2.matrixLLT().diagonal().array().log().sum();
        report.e_t = (c1 * c2inv).trace() / p - 1.0 + dmu.dot(c2inv * dmu) / p -
                     (logdet1 - logdet2) / p;
        report.v_t = 2.0 / (double(p) * p) * middle.squaredNorm() +
                     4.0 / (double(p) * p) * dmu.dot(c2inv * c1 * c2inv * dmu);
    }

    if (report.v_t <= 0.0) {
        report.error_rate = 0.5;
    } else {
        report.error_rate = stdnormal_cdf(-report.e_t / std::sqrt(report.v_t));
    }
    return report;
}

namespace {

MixtureParams preset(int n, int p, double mu_value, double e_alpha, EntryDist dist) {
    MixtureParams params;
    params.n = n;
    params.p = p;
    params.mu1 = Vec::Zero(p);
    params.mu1(0) = -mu_value;
    params.mu2 = -params.mu1;
    if (e_alpha != 0.0) {
        params.e1.kind = CovPerturbation::Kind::IsoScalar;
        params.e1.alpha = e_alpha;
        params.e2.kind = CovPerturbation::Kind::IsoScalar;
        params.e2.alpha = -e_alpha;
    }
    params.dist.tag = dist;
    return params;
}

}  // namespace

MixtureParams canonical_scenario(const std::string& name) {
    if (name == "fig1") return preset(2048, 512, 1.5, 0.0, EntryDist::Gaussian);
    if (name == "fig2") return preset(2048, 8192, 2.0, -10.0, EntryDist::Gaussian);
    if (name == "fig3") return preset(2048, 8192, 2.0, -10.0, EntryDist::Rademacher);
    throw std::invalid_argument("unknown scenario: " + name);
}

MixtureParams scenario_from_json(const nlohmann::json& config) {
    MixtureParams params;
    params.n = config.at("n").get<int>();
    params.p = config.at("p").get<int>();
    params.mu1 = Vec::Zero(params.p);
    params.mu2 = Vec::Zero(params.p);
    if (config.contains("mu")) {
        const auto& mu = config.at("mu");
        const std::string kind = mu.at("kind").get<std::string>();
        if (kind != "first_coord") throw std::invalid_argument("mu.kind must be first_coord");
        params.mu1(0) = -mu.at("value").get<double>();
        params.mu2(0) = -params.mu1(0);
    }
    if (config.contains("e")) {
        const auto& e = config.at("e");
        const std::string kind = e.at("kind").get<std::string>();
        if (kind == "zero") {
            // default
        } else if (kind == "iso") {  // opposed pair E1 = a I/sqrt p = -E2
            params.e1.kind = CovPerturbation::Kind::IsoScalar;
            params.e1.alpha = e.at("value").get<double>();
            params.e2.kind = CovPerturbation::Kind::IsoScalar;
            params.e2.alpha = -params.e1.alpha;
        } else if (kind == "iso_same") {
            params.e1.kind = CovPerturbation::Kind::IsoScalar;
            params.e1.alpha = e.at("value").get<double>();
            params.e2 = params.e1;
        } else {
            throw std::invalid_argument("e.kind must be zero, iso or iso_same");
        }
    }
    if (config.contains("dist")) {
        const std::string d = config.at("dist").get<std::string>();
        if (d == "gaussian")
            params.dist.tag = EntryDist::Gaussian;
        else if (d == "rademacher")
            params.dist.tag = EntryDist::Rademacher;
        else if (d == "student_t") {
            params.dist.tag = EntryDist::StudentT;
            params.dist.df = config.value("df", 7);
        } else
            throw std::invalid_argument("dist must be gaussian, rademacher or student_t");
    }
    params.validate();
    return params;
}

MixtureParams load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario config: " + path);
    nlohmann::json config;
    in >> config;
    return scenario_from_json(config);
}

void write_matrix(const std::string& path, const Mat& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    const uint64_t magic = kMatrixMagic;
    const uint32_t rows = static_cast<uint32_t>(m.rows());
    const uint32_t cols = static_cast<uint32_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&magic), 8);
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    // row-major payload, buffered one row at a time
    std::vector<double> row(m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(8 * row.size()));
    }
}

Mat read_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    uint64_t magic = 0;
    uint32_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&magic), 8);
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    if (magic != kMatrixMagic) throw std::runtime_error("bad matrix magic in " + path);
    Mat m(rows, cols);
    std::vector<double> row(cols);
    for (uint32_t i = 0; i < rows; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(8 * cols));
        for (uint32_t j = 0; j < cols; ++j) m(i, j) = row[j];
    }
    if (!in) throw std::runtime_error("truncated matrix file: " + path);
    return m;
}

}  // namespace mixkern::model
