#include "nsmfm/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "nsmfm/rng.hpp"

namespace nsmfm {

namespace {

std::string dims(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

Matrix uniform_matrix(Rng& rng, Index rows, Index cols, double half_width) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Matrix m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

Matrix normal_matrix(Rng& rng, Index rows, Index cols, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * n(rng);
  return m;
}

}  // namespace

MatrixPanel::MatrixPanel(std::vector<Matrix> frames) : frames_(std::move(frames)) {
  if (frames_.empty()) fail(ErrorCode::InvalidInput, "panel needs at least one time point");
  p1_ = frames_.front().rows();
  p2_ = frames_.front().cols();
  if (p1_ == 0 || p2_ == 0) fail(ErrorCode::InvalidInput, "panel frames must be non-empty");
  for (std::size_t t = 0; t < frames_.size(); ++t) {
    if (frames_[t].rows() != p1_ || frames_[t].cols() != p2_) {
      fail(ErrorCode::ShapeError, "frame " + std::to_string(t) + " is " + dims(frames_[t].rows(), frames_[t].cols()) +
                                      ", expected " + dims(p1_, p2_));
    }
    if (!frames_[t].allFinite()) fail(ErrorCode::InvalidInput, "frame " + std::to_string(t) + " has non-finite entries");
  }
}

MatrixPanel MatrixPanel::zeros(Index p1, Index p2, Index T) {
  return MatrixPanel(std::vector<Matrix>(static_cast<std::size_t>(T), Matrix::Zero(p1, p2)));
}

MatrixPanel MatrixPanel::scaled(double kappa) const {
  std::vector<Matrix> out;
  out.reserve(frames_.size());
  for (const Matrix& x : frames_) out.emplace_back(kappa * x);
  return MatrixPanel(std::move(out));
}

bool operator==(const MatrixPanel& a, const MatrixPanel& b) {
  if (a.p1_ != b.p1_ || a.p2_ != b.p2_ || a.frames_.size() != b.frames_.size()) return false;
  for (std::size_t t = 0; t < a.frames_.size(); ++t)
    if (a.frames_[t] != b.frames_[t]) return false;
  return true;
}

FactorPath::FactorPath(Index hR, Index hC, std::vector<Matrix> frames)
    : hR_(hR), hC_(hC), frames_(std::move(frames)) {
  if (hR < 0 || hC < 0) fail(ErrorCode::InvalidInput, "negative factor dimensions");
  for (std::size_t t = 0; t < frames_.size(); ++t) {
    if (frames_[t].rows() != hR || frames_[t].cols() != hC) {
      fail(ErrorCode::ShapeError, "factor frame " + std::to_string(t) + " is " +
                                      dims(frames_[t].rows(), frames_[t].cols()) + ", expected " + dims(hR, hC));
    }
  }
}

FactorPath FactorPath::zeros(Index hR, Index hC, Index T) {
  return FactorPath(hR, hC, std::vector<Matrix>(static_cast<std::size_t>(T), Matrix::Zero(hR, hC)));
}

void Ranks::validate() const {
  if (hR1 < 0 || hC1 < 0 || hR0 < 0 || hC0 < 0) fail(ErrorCode::InvalidConfig, "ranks must be nonnegative: " + to_string());
  if ((hR1 == 0) != (hC1 == 0)) fail(ErrorCode::InvalidConfig, "trend block needs hR1 and hC1 both zero or both positive: " + to_string());
  if ((hR0 == 0) != (hC0 == 0)) fail(ErrorCode::InvalidConfig, "stationary block needs hR0 and hC0 both zero or both positive: " + to_string());
}

void Ranks::validate_for(Index p1, Index p2) const {
  validate();
  if (hR1 > p1 || hR0 > p1 || hC1 > p2 || hC0 > p2) {
    fail(ErrorCode::RankTooLarge, "ranks " + to_string() + " exceed panel dimensions " + dims(p1, p2));
  }
}

std::string Ranks::to_string() const {
  std::ostringstream os;
  os << hR1 << ',' << hC1 << ',' << hR0 << ',' << hC0;
  return os.str();
}

Ranks parse_ranks(const std::string& text) {
  std::istringstream is(text);
  std::string item;
  int values[4];
  int n = 0;
  while (std::getline(is, item, ',')) {
    if (n == 4) fail(ErrorCode::InvalidConfig, "ranks need exactly four values: '" + text + "'");
    try {
      std::size_t used = 0;
      values[n] = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidConfig, "invalid rank value '" + item + "'");
    }
    ++n;
  }
  if (n != 4) fail(ErrorCode::InvalidConfig, "ranks need exactly four values: '" + text + "'");
  Ranks r{values[0], values[1], values[2], values[3]};
  r.validate();
  return r;
}

void DgpConfig::validate() const {
  if (p1 <= 0 || p2 <= 0 || T <= 0) {
    fail(ErrorCode::InvalidConfig, "dimensions must be positive, got p1=" + std::to_string(p1) +
                                       " p2=" + std::to_string(p2) + " T=" + std::to_string(T));
  }
  ranks.validate_for(p1, p2);
  if (!(a0 > 0.0) || !(a1 > 0.0)) fail(ErrorCode::InvalidConfig, "loading half-widths a0, a1 must be positive");
  if (!(sigma0 >= 0.0)) fail(ErrorCode::InvalidConfig, "sigma0 must be nonnegative");
  if (!(noiseStd >= 0.0)) fail(ErrorCode::InvalidConfig, "noise standard deviation must be nonnegative");
}

Simulation simulate(const DgpConfig& config) {
  config.validate();
  const Index p1 = config.p1, p2 = config.p2, T = config.T;
  const Ranks& h = config.ranks;

  Rng loading_rng(substream_seed(config.loadingSeed.value_or(config.seed), stream::kLoadings));
  Rng trend_rng(substream_seed(config.seed, stream::kTrend));
  Rng stationary_rng(substream_seed(config.seed, stream::kStationary));
  Rng noise_rng(substream_seed(config.seed, stream::kNoise));

  TrueModel m;
  m.R1 = Loadings(uniform_matrix(loading_rng, p1, h.hR1, config.a1));
  m.C1 = Loadings(uniform_matrix(loading_rng, p2, h.hC1, config.a1));
  m.R0 = Loadings(uniform_matrix(loading_rng, p1, h.hR0, config.a0));
  m.C0 = Loadings(uniform_matrix(loading_rng, p2, h.hC0, config.a0));

  std::vector<Matrix> f1, f0, e;
  f1.reserve(static_cast<std::size_t>(T));
  f0.reserve(static_cast<std::size_t>(T));
  e.reserve(static_cast<std::size_t>(T));
  Matrix level = Matrix::Zero(h.hR1, h.hC1);
  const double f0_scale = std::sqrt(config.sigma0);
  for (Index t = 0; t < T; ++t) {
    level += normal_matrix(trend_rng, h.hR1, h.hC1, 1.0);
    f1.push_back(level);
    f0.push_back(normal_matrix(stationary_rng, h.hR0, h.hC0, f0_scale));
    e.push_back(normal_matrix(noise_rng, p1, p2, config.noiseStd));
  }
  m.F1 = FactorPath(h.hR1, h.hC1, std::move(f1));
  m.F0 = FactorPath(h.hR0, h.hC0, std::move(f0));
  m.E = MatrixPanel(std::move(e));

  MatrixPanel panel = assemble_panel(m);
  return Simulation{std::move(panel), std::move(m)};
}

MatrixPanel assemble_panel(const TrueModel& m) {
  const Index p1 = m.E.p1(), p2 = m.E.p2(), T = m.E.T();
  auto check = [&](const Loadings& l, Index p, Index h, const char* name) {
    if (l.p() != p || l.h() != h) {
      fail(ErrorCode::ShapeError, std::string(name) + " is " + dims(l.p(), l.h()) + ", expected " + dims(p, h));
    }
  };
  check(m.R1, p1, m.F1.hR(), "R1");
  check(m.C1, p2, m.F1.hC(), "C1");
  check(m.R0, p1, m.F0.hR(), "R0");
  check(m.C0, p2, m.F0.hC(), "C0");
  if (m.F1.T() != T || m.F0.T() != T) fail(ErrorCode::ShapeError, "factor paths and errors have different lengths");

  std::vector<Matrix> frames;
  frames.reserve(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    Matrix x = (m.R1.matrix() * m.F1[t]) * m.C1.matrix().transpose();
    x += (m.R0.matrix() * m.F0[t]) * m.C0.matrix().transpose();
    x += m.E[t];
    frames.push_back(std::move(x));
  }
  return MatrixPanel(std::move(frames));
}

MatrixPanel difference_panel(const MatrixPanel& panel) {
  if (panel.T() < 2) fail(ErrorCode::InvalidInput, "differencing needs T >= 2");
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(panel.T() - 1));
  for (Index t = 1; t < panel.T(); ++t) out.emplace_back(panel[t] - panel[t - 1]);
  return MatrixPanel(std::move(out));
}

}  // namespace nsmfm
