#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsmfm/linalg.hpp"

namespace nsmfm {

// Observed matrix-valued series: T frames of p1 x p2 finite reals.
class MatrixPanel {
 public:
  MatrixPanel() = default;
  explicit MatrixPanel(std::vector<Matrix> frames);

  static MatrixPanel zeros(Index p1, Index p2, Index T);

  [[nodiscard]] Index p1() const noexcept { return p1_; }
  [[nodiscard]] Index p2() const noexcept { return p2_; }
  [[nodiscard]] Index T() const noexcept { return static_cast<Index>(frames_.size()); }

  // 0-based time index.
  [[nodiscard]] const Matrix& operator[](Index t) const { return frames_[static_cast<std::size_t>(t)]; }
  [[nodiscard]] const std::vector<Matrix>& frames() const noexcept { return frames_; }

  [[nodiscard]] MatrixPanel scaled(double kappa) const;

  friend bool operator==(const MatrixPanel& a, const MatrixPanel& b);

 private:
  Index p1_ = 0;
  Index p2_ = 0;
  std::vector<Matrix> frames_;
};

// T frames of hR x hC latent factors. hR * hC == 0 encodes an absent block.
class FactorPath {
 public:
  FactorPath() = default;
  FactorPath(Index hR, Index hC, std::vector<Matrix> frames);

  static FactorPath zeros(Index hR, Index hC, Index T);

  [[nodiscard]] Index hR() const noexcept { return hR_; }
  [[nodiscard]] Index hC() const noexcept { return hC_; }
  [[nodiscard]] Index T() const noexcept { return static_cast<Index>(frames_.size()); }
  [[nodiscard]] bool empty() const noexcept { return hR_ * hC_ == 0; }

  [[nodiscard]] const Matrix& operator[](Index t) const { return frames_[static_cast<std::size_t>(t)]; }
  [[nodiscard]] const std::vector<Matrix>& frames() const noexcept { return frames_; }

 private:
  Index hR_ = 0;
  Index hC_ = 0;
  std::vector<Matrix> frames_;
};

struct Ranks {
  int hR1 = 0;
  int hC1 = 0;
  int hR0 = 0;
  int hC0 = 0;

  // Nonnegativity and pairing: a block exists on both sides or not at all.
  void validate() const;
  void validate_for(Index p1, Index p2) const;

  [[nodiscard]] bool has_trend() const noexcept { return hR1 > 0 && hC1 > 0; }
  [[nodiscard]] bool has_stationary() const noexcept { return hR0 > 0 && hC0 > 0; }

  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const Ranks&, const Ranks&) = default;
};

// Parses "hR1,hC1,hR0,hC0".
Ranks parse_ranks(const std::string& text);

struct DgpConfig {
  Index p1 = 0;
  Index p2 = 0;
  Index T = 0;
  Ranks ranks;
  double a0 = 1.0;        // R0, C0 ~ U[-a0, a0]
  double a1 = 1.0;        // R1, C1 ~ U[-a1, a1]
  double sigma0 = 1.0;    // vec(F0_t) ~ N(0, sigma0 I); sigma0 is the variance
  double noiseStd = 1.0;  // E_t entries ~ N(0, noiseStd^2)
  std::uint64_t seed = 0;
  // When set, loadings are drawn from this seed instead of `seed`, so they
  // can be held fixed across Monte Carlo replications.
  std::optional<std::uint64_t> loadingSeed;

  void validate() const;
};

struct TrueModel {
  Loadings R1, C1, R0, C0;
  FactorPath F1, F0;
  MatrixPanel E;
};

struct Simulation {
  MatrixPanel panel;
  TrueModel truth;
};

// F1 is a Gaussian random walk started at zero; loadings are uniform draws
// (not normalized); every component uses its own seed sub-stream.
Simulation simulate(const DgpConfig& config);

// X_t = R1 F1_t C1' + R0 F0_t C0' + E_t.
MatrixPanel assemble_panel(const TrueModel& model);

// Delta X_t = X_t - X_{t-1}, length T - 1.
MatrixPanel difference_panel(const MatrixPanel& panel);

}  // namespace nsmfm
