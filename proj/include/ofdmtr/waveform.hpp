#ifndef OFDMTR_WAVEFORM_HPP
#define OFDMTR_WAVEFORM_HPP

#include <cstddef>
#include <span>

#include "ofdmtr/types.hpp"

namespace ofdmtr {

/// Dimensions of a multicarrier pulse: N carriers spaced freq_step_hz apart,
/// M amplitude-phase coded bits per carrier, oversampled O_s times relative
/// to the carrier spacing. Everything else (bit duration, pulse width, sample
/// rate, sample count) derives from these four numbers.
class WaveformParams {
 public:
  WaveformParams(std::size_t n_carriers, std::size_t n_bits,
                 std::size_t oversampling, double freq_step_hz);

  std::size_t n_carriers() const { return n_carriers_; }
  std::size_t n_bits() const { return n_bits_; }
  std::size_t oversampling() const { return oversampling_; }
  double freq_step_hz() const { return freq_step_hz_; }

  double bit_duration_s() const { return 1.0 / freq_step_hz_; }
  double pulse_width_s() const { return double(n_bits_) * bit_duration_s(); }
  double sample_rate_hz() const {
    return double(oversampling_ * n_carriers_) * freq_step_hz_;
  }
  /// Samples within one bit (O_s * N).
  std::size_t samples_per_bit() const { return oversampling_ * n_carriers_; }
  /// Total sample count L = O_s * N * M.
  std::size_t n_samples() const { return samples_per_bit() * n_bits_; }
  /// Total code slots N * M.
  std::size_t n_codes() const { return n_carriers_ * n_bits_; }

  /// Below O_s = 4 the sampled peak can noticeably underestimate the
  /// continuous-envelope peak; callers that quote PMEPR should warn.
  bool oversampling_adequate() const { return oversampling_ >= 4; }

  bool operator==(const WaveformParams&) const = default;

 private:
  std::size_t n_carriers_;
  std::size_t n_bits_;
  std::size_t oversampling_;
  double freq_step_hz_;
};

/// The N x M modulation codes a_{n,m}, stored flat in bit-major order so that
/// vec()[m*N + n] = a_{n,m}. This matches the sample layout l = k + m*O_s*N:
/// bit m's codes drive bit m's samples.
class SymbolMatrix {
 public:
  SymbolMatrix(std::size_t n_carriers, std::size_t n_bits);
  static SymbolMatrix from_vector(std::size_t n_carriers, std::size_t n_bits,
                                  CplxVec codes);

  std::size_t n_carriers() const { return n_carriers_; }
  std::size_t n_bits() const { return n_bits_; }

  Cplx& at(std::size_t carrier, std::size_t bit);
  const Cplx& at(std::size_t carrier, std::size_t bit) const;

  /// Flat bit-major view [a_0^T ... a_{M-1}^T]^T.
  const CplxVec& vec() const { return codes_; }
  CplxVec to_vector() const { return codes_; }

  bool operator==(const SymbolMatrix&) const = default;

 private:
  std::size_t n_carriers_;
  std::size_t n_bits_;
  CplxVec codes_;
};

/// Complex baseband samples x of length L with the grid they were drawn on.
class BasebandSignal {
 public:
  BasebandSignal(WaveformParams params, CplxVec samples);

  const WaveformParams& params() const { return params_; }
  const CplxVec& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

 private:
  WaveformParams params_;
  CplxVec samples_;
};

/// Per-bit synthesis matrix F (O_sN x N) with F_{kn} = exp(j 2 pi n k / (O_sN)).
/// The full operator diag(F, ..., F) over the M bits is applied blockwise and
/// never materialized. Columns are orthogonal: F^H F = O_sN * I.
class FourierOperator {
 public:
  explicit FourierOperator(const WaveformParams& params);

  const WaveformParams& params() const { return params_; }
  /// Column for one carrier, contiguous, length samples_per_bit().
  std::span<const Cplx> column(std::size_t carrier) const;
  /// Diagonal value of F^H F.
  double gram_diagonal() const { return double(params_.samples_per_bit()); }

  /// Apply the block operator to a flat bit-major code vector (length NM -> L).
  CplxVec apply(const CplxVec& codes) const;
  BasebandSignal synthesize(const SymbolMatrix& symbols) const;

 private:
  WaveformParams params_;
  CplxVec columns_;  // carrier-major: columns_[n*K + k]
};

/// x_{k+m*O_s*N} = sum_n a_{n,m} exp(j 2 pi n k / (O_s N)).
BasebandSignal synthesize(const WaveformParams& params,
                          const SymbolMatrix& symbols);

}  // namespace ofdmtr

#endif
