#include "ofdmtr/waveform.hpp"

#include <cmath>
#include <numbers>

namespace ofdmtr {

WaveformParams::WaveformParams(std::size_t n_carriers, std::size_t n_bits,
                               std::size_t oversampling, double freq_step_hz)
    : n_carriers_(n_carriers),
      n_bits_(n_bits),
      oversampling_(oversampling),
      freq_step_hz_(freq_step_hz) {
  if (n_carriers_ == 0 || n_bits_ == 0 || oversampling_ == 0) {
    throw DimensionError("WaveformParams: carrier/bit/oversampling counts must be positive");
  }
  if (!(freq_step_hz_ > 0.0) || !std::isfinite(freq_step_hz_)) {
    throw DimensionError("WaveformParams: freq_step_hz must be positive and finite");
  }
}

SymbolMatrix::SymbolMatrix(std::size_t n_carriers, std::size_t n_bits)
    : n_carriers_(n_carriers), n_bits_(n_bits), codes_(n_carriers * n_bits) {
  if (n_carriers_ == 0 || n_bits_ == 0) {
    throw DimensionError("SymbolMatrix: dimensions must be positive");
  }
}

SymbolMatrix SymbolMatrix::from_vector(std::size_t n_carriers,
                                       std::size_t n_bits, CplxVec codes) {
  SymbolMatrix s(n_carriers, n_bits);
  if (codes.size() != n_carriers * n_bits) {
    throw DimensionError("SymbolMatrix: vector length does not match N*M");
  }
  s.codes_ = std::move(codes);
  return s;
}

Cplx& SymbolMatrix::at(std::size_t carrier, std::size_t bit) {
  if (carrier >= n_carriers_ || bit >= n_bits_) {
    throw DimensionError("SymbolMatrix: index out of range");
  }
  return codes_[bit * n_carriers_ + carrier];
}

const Cplx& SymbolMatrix::at(std::size_t carrier, std::size_t bit) const {
  if (carrier >= n_carriers_ || bit >= n_bits_) {
    throw DimensionError("SymbolMatrix: index out of range");
  }
  return codes_[bit * n_carriers_ + carrier];
}

BasebandSignal::BasebandSignal(WaveformParams params, CplxVec samples)
    : params_(params), samples_(std::move(samples)) {
  if (samples_.size() != params_.n_samples()) {
    throw DimensionError("BasebandSignal: sample count does not match params.n_samples()");
  }
}

FourierOperator::FourierOperator(const WaveformParams& params)
    : params_(params) {
  const std::size_t K = params_.samples_per_bit();
  const std::size_t N = params_.n_carriers();
  columns_.resize(K * N);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      // n*k reduced mod K keeps the phase argument small for accuracy.
      const std::size_t q = (n * k) % K;
      columns_[n * K + k] =
          std::polar(1.0, 2.0 * std::numbers::pi * double(q) / double(K));
    }
  }
}

std::span<const Cplx> FourierOperator::column(std::size_t carrier) const {
  if (carrier >= params_.n_carriers()) {
    throw DimensionError("FourierOperator: carrier index out of range");
  }
  const std::size_t K = params_.samples_per_bit();
  return {columns_.data() + carrier * K, K};
}

CplxVec FourierOperator::apply(const CplxVec& codes) const {
  if (codes.size() != params_.n_codes()) {
    throw DimensionError("FourierOperator: code vector length does not match N*M");
  }
  const std::size_t K = params_.samples_per_bit();
  const std::size_t N = params_.n_carriers();
  const std::size_t M = params_.n_bits();
  CplxVec x(params_.n_samples(), Cplx(0.0, 0.0));
  for (std::size_t m = 0; m < M; ++m) {
    Cplx* block = x.data() + m * K;
    for (std::size_t n = 0; n < N; ++n) {
      const Cplx a = codes[m * N + n];
      if (a == Cplx(0.0, 0.0)) continue;
      const Cplx* col = columns_.data() + n * K;
      for (std::size_t k = 0; k < K; ++k) {
        block[k] += a * col[k];
      }
    }
  }
  return x;
}

BasebandSignal FourierOperator::synthesize(const SymbolMatrix& symbols) const {
  if (symbols.n_carriers() != params_.n_carriers() ||
      symbols.n_bits() != params_.n_bits()) {
    throw DimensionError("synthesize: symbol matrix shape does not match params");
  }
  return BasebandSignal(params_, apply(symbols.vec()));
}

BasebandSignal synthesize(const WaveformParams& params,
                          const SymbolMatrix& symbols) {
  return FourierOperator(params).synthesize(symbols);
}

}  // namespace ofdmtr
