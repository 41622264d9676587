// Desk-scale waveform chain: array responses, orthogonal Fourier codewords,
// received-signal synthesis, matched filtering for ToA, and 2D MUSIC for
// joint AoA/AoD. Produces PathObservation lists interchangeable with the
// parametric channel surrogate.
#ifndef HVSENSE_SIGNAL_FRONTEND_HPP
#define HVSENSE_SIGNAL_FRONTEND_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "hvsense/channel.hpp"

namespace hvsense {

/// Antenna positions in wavelengths, in the owning vehicle's body frame.
/// Element 0 is the phase reference.
struct ArrayGeometry {
  std::vector<Eigen::Vector2d> element_positions;

  int count() const { return static_cast<int>(element_positions.size()); }
};

/// Uniform linear array along the body x-axis.
ArrayGeometry make_ula(int count, double spacing_wavelengths = 0.5);

/// Uniform circular array sized so adjacent elements sit min_spacing apart.
/// Circular layouts have no front-back ambiguity, which a full-azimuth
/// search needs.
ArrayGeometry make_uca(int count, double min_spacing_wavelengths = 0.5);

Eigen::VectorXcd steering_tx(const ArrayGeometry& geom, double phi);
Eigen::VectorXcd steering_rx(const ArrayGeometry& geom, double theta);

/// Orthonormal Fourier codebook: column m is antenna m's codeword.
struct WaveformSet {
  Eigen::MatrixXcd codebook;  // M_t x M_t, unitary
  double symbol_interval = 0.0;
  double duration = 0.0;
  double bandwidth = 0.0;
};

WaveformSet fourier_waveforms(int tx_antennas, double bandwidth);

struct SignalTiming {
  double coherence_time = 0.0;
  double waveform_duration = 0.0;
  double delay_spread = 0.0;

  /// Coherence must dominate the waveform; 10x is the warning threshold.
  bool coherent_enough() const {
    return coherence_time >= 10.0 * waveform_duration;
  }
};

struct FrontendConfig {
  int tx_antennas = 8;
  int rx_antennas = 8;
  double bandwidth = 1e8;         // Hz, also the sampling rate
  double noise_power_dbm = -70.0;
  double grid_step = deg2rad(0.2);
  double peak_threshold_db = 6.0;  // above the matched-filter noise floor

  // The codeword repeats throughout the waveform; coherent averaging over
  // the repetitions divides the noise power. One period is simulated in
  // steady state, so delays live modulo the period and only TDoA matters
  // downstream (a global shift is one more clock offset).
  int repetitions = 128;
  int period_samples = 512;
};

/// One transmit path for the synthesizer: geometry plus complex gain.
struct FrontendPath {
  double theta = 0.0;
  double phi = 0.0;
  double toa = 0.0;       // s, on the receiver clock
  std::complex<double> gain{1.0, 0.0};
};

FrontendPath frontend_path_from_budget(const PathBudget& budget,
                                       double gamma_clock, Rng& rng);

/// Received sample stream (one column per sample) on the Nyquist grid,
/// including fractional delays via windowed-sinc interpolation and circular
/// Gaussian noise at the configured power.
Eigen::MatrixXcd synthesize_rx(const std::vector<FrontendPath>& paths,
                               const WaveformSet& waveforms,
                               const ArrayGeometry& tx_geom,
                               const ArrayGeometry& rx_geom,
                               double noise_power_dbm, Rng& rng);

struct MatchedFilterPeak {
  int sample = 0;
  double toa = 0.0;        // s, sub-sample refined
  Eigen::MatrixXcd snapshot;  // Y[z] at the peak, M_r x M_t
  double magnitude = 0.0;  // Frobenius norm at the peak
};

/// Correlates the stream against the codebook and returns local maxima of
/// ||Y[z]||_F above the threshold; throws NoPeaksError when nothing
/// clears it.
std::vector<MatchedFilterPeak> matched_filter(const Eigen::MatrixXcd& rx,
                                              const WaveformSet& waveforms,
                                              const FrontendConfig& cfg);

/// Steady-state repeated transmission: one cyclic period of the received
/// stream, coherently averaged over cfg.repetitions (noise power divided
/// accordingly). Delays are taken modulo the period.
Eigen::MatrixXcd synthesize_rx_periodic(const std::vector<FrontendPath>& paths,
                                        const WaveformSet& waveforms,
                                        const ArrayGeometry& tx_geom,
                                        const ArrayGeometry& rx_geom,
                                        const FrontendConfig& cfg, Rng& rng);

/// Circular matched filter over one period with continuous-lag refinement
/// of each retained peak.
std::vector<MatchedFilterPeak> matched_filter_periodic(
    const Eigen::MatrixXcd& rx_period, const WaveformSet& waveforms,
    const FrontendConfig& cfg);

struct AnglePair {
  double theta = 0.0;
  double phi = 0.0;
  std::complex<double> gain{0.0, 0.0};
  // Sub-sample delay relative to the snapshot's integer lag, read off the
  // transmit-side phase ramp (a fractional delay of a Fourier codeword is
  // a per-antenna phase ramp, by the DFT shift theorem).
  double delay_offset = 0.0;
};

/// Joint AoA/AoD estimation from one matched-filter snapshot: subspace
/// split by the singular-value gap, grid search of the two projection
/// spectra, golden refinement, and amplitude-based pairing.
std::vector<AnglePair> music_2d(const Eigen::MatrixXcd& snapshot,
                                const ArrayGeometry& tx_geom,
                                const ArrayGeometry& rx_geom,
                                const FrontendConfig& cfg);

/// Full chain: synthesize -> matched filter -> MUSIC -> observations with
/// rho referenced to the earliest-arriving path.
std::vector<PathObservation> frontend_observations(
    const std::vector<FrontendPath>& paths, const FrontendConfig& cfg,
    Rng& rng);

}  // namespace hvsense

#endif  // HVSENSE_SIGNAL_FRONTEND_HPP
