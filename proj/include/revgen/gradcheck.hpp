#ifndef REVGEN_GRADCHECK_HPP_
#define REVGEN_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>

#include "revgen/glstm_cell.hpp"
#include "revgen/model.hpp"
#include "revgen/textdata.hpp"

namespace revgen {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-5;
/// Denominator floor of the relative error: |a - n| / max(|a|, |n|, floor).
/// Below it the comparison is effectively absolute. Central differences at a
/// step of 1e-5 carry roughly 1e-11 of rounding noise on an O(1) loss.
inline constexpr double kGradCheckFloor = 1e-5;

double gradient_relative_error(double analytic, double numeric);

struct GradCheckDims {
  std::size_t vocab_size = 6;
  std::size_t raw_feature_dim = 4;
  std::size_t feature_dim = 4;
  std::size_t hidden_dim = 4;
  std::size_t embed_dim = 4;
  std::size_t seq_len = 5;  // predicted tokens

  /// Every size set to n (vocab n+2, raw feature n+1 so the projection is exercised).
  static GradCheckDims uniform(std::size_t n);
  void validate() const;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
  bool passed = false;
};

struct GradCheckOptions {
  double tolerance = kGradCheckTolerance;
  double step = kGradCheckStep;
  CellOptions cell{false, false, 50.0};
  MaskNorm mask_norm = MaskNorm::kNone;
  /// Test hooks applied to the analytic gradients before comparison.
  std::function<void(GLSTMParams&)> corrupt_cell;
  std::function<void(ModelParams&)> corrupt_model;
};

/// Single-step check of glstm_backward against central differences of
/// L = a.m_t + b.c_t with random a, b. Covers every weight, bias and input.
GradCheckResult check_cell_gradients(std::size_t input_dim, std::size_t hidden_dim,
                                     std::size_t guidance_dim, std::uint64_t seed,
                                     const GradCheckOptions& options = {});

/// Random model and example sized by `dims`, with cell clipping disabled.
Model gradcheck_model(const GradCheckDims& dims, std::uint64_t seed,
                      const GradCheckOptions& options = {});
ReviewExample gradcheck_example(const GradCheckDims& dims, std::uint64_t seed);

/// Full bilevel model: sequence_loss gradients against central differences.
GradCheckResult check_model_gradients(const Model& model, const ReviewExample& example,
                                      const GradCheckOptions& options = {});

struct GradCheckReport {
  GradCheckResult cell;
  GradCheckResult model;
  bool passed() const { return cell.passed && model.passed; }
  std::string to_json() const;
};

GradCheckReport gradcheck(const GradCheckDims& dims, std::uint64_t seed,
                          const GradCheckOptions& options = {});

}  // namespace revgen

#endif  // REVGEN_GRADCHECK_HPP_
