// Magnetic-field-dependent hyperfine and superhyperfine level structure of
// the two excited doublets (Y1 lower, X1 upper) and the optical transitions
// between them under a configurable lattice-spin selection rule.
//
// Units: frequencies Hz, splitting rates Hz/T, fields T.
#pragma once

#include <span>
#include <vector>

#include "shbkit/errors.hpp"

namespace shbkit {

enum class Doublet { Y1, X1 };
enum class Spin { Down, Up };
enum class SelectionRule { SpinConserving, SpinFree };

struct HyperfineModel {
    double rate_y1_hz_per_t = 25.6e6;      // hyperfine splitting rate of Y1
    double rate_x1_hz_per_t = 41.6e6;      // hyperfine splitting rate of X1
    double shf_diff_y1_hz_per_t = 3.05e6;  // rate of (Dl_up - Dl_down)
    double shf_diff_x1_hz_per_t = 2.35e6;  // rate of (Dh_up - Dh_down)
    SelectionRule selection_rule = SelectionRule::SpinConserving;

    void validate() const;  // all rates finite and non-negative
};

struct LevelState {
    Doublet doublet;
    Spin hyperfine;
    Spin lattice_spin;
    double energy_offset_hz;  // relative to the doublet's zero-field position
};

struct TransitionLine {
    LevelState lower;  // in Y1
    LevelState upper;  // in X1
    double detuning_hz;  // relative to the zero-field Y1-X1 line center
    bool allowed;
};

// All 8 states (4 per doublet) at the given field. Hyperfine offsets sit at
// +-Delta/2 with Delta = rate * field. Only the difference of the two
// superhyperfine splittings is observable, so the convention is d(down) = 0
// and d(up) = shf_diff * field, with lattice spin down/up at -+d/2.
std::vector<LevelState> enumerate_levels(const HyperfineModel& model, double field_t);

// All 16 Y1 -> X1 pairs, detuning = upper offset - lower offset. `allowed`
// is false exactly when the rule is SpinConserving and the lattice spins of
// the two states differ.
std::vector<TransitionLine> enumerate_transitions(std::span<const LevelState> levels,
                                                  const HyperfineModel& model);

enum class FeatureClass { Central, InnerCluster, OuterCluster, AntiHole };

struct PatternFeature {
    double detuning_hz;  // relative to the burn frequency
    FeatureClass cls;
    int sign;        // +1 hole, -1 anti-hole
    double weight;   // relative depth weight, central = 1
};

struct HolePattern {
    std::vector<PatternFeature> features;
    double field_t = 0.0;
    // Set when the SpinFree rule put superhyperfine satellites on the central
    // hole; that mode contradicts the measured spectra.
    bool spin_free_satellites = false;
};

// Signed spectral features aggregated over all burn scenarios: central hole
// at 0, inner clusters at +-Dl with members split by (Dl_up - Dl_down), outer
// clusters at +-Dh split by (Dh_up - Dh_down); optional anti-holes at +-Dl
// and +-(Dh - Dl). Coincident same-sign features are merged.
HolePattern predict_hole_pattern(const HyperfineModel& model, double field_t,
                                 bool include_antiholes);

}  // namespace shbkit
