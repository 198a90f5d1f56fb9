#pragma once

#include <stdexcept>
#include <string>

namespace viliq {

// Error taxonomy. Kind maps onto CLI exit codes: validation -> 2, numeric -> 3.
enum class ErrorKind { validation, numeric, io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define VILIQ_DEFINE_ERROR(Name, Kind)                                       \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& msg = #Name)                        \
            : Error(ErrorKind::Kind, std::string(#Name) + ": " + msg) {}     \
    }

// core-model
VILIQ_DEFINE_ERROR(InvalidParameter, validation);
VILIQ_DEFINE_ERROR(NetForceNonPositive, numeric);
VILIQ_DEFINE_ERROR(Overdamped, numeric);
VILIQ_DEFINE_ERROR(InvalidDecrement, validation);
VILIQ_DEFINE_ERROR(NegativeShear, numeric);
VILIQ_DEFINE_ERROR(StepTooCoarse, validation);

// signal-synth
VILIQ_DEFINE_ERROR(TraceTooSparse, validation);

// reconstruction
VILIQ_DEFINE_ERROR(BurstTooShort, validation);
VILIQ_DEFINE_ERROR(EmptyTrace, validation);
VILIQ_DEFINE_ERROR(NoPeakAboveMinFreq, numeric);
VILIQ_DEFINE_ERROR(AmbiguousReordering, numeric);

// sparse-recovery
VILIQ_DEFINE_ERROR(ZeroColumn, validation);
VILIQ_DEFINE_ERROR(NoProgress, numeric);
VILIQ_DEFINE_ERROR(UnderdeterminedFit, validation);

// interference-volume
VILIQ_DEFINE_ERROR(RecordingTooShort, validation);
VILIQ_DEFINE_ERROR(TemplateZeroInBand, numeric);
VILIQ_DEFINE_ERROR(GridMismatch, validation);
VILIQ_DEFINE_ERROR(ZeroWeight, validation);
VILIQ_DEFINE_ERROR(EmptyDb, validation);
VILIQ_DEFINE_ERROR(EmptyCorrelation, numeric);

// calibration-estimator
VILIQ_DEFINE_ERROR(TooFewDecayPeaks, numeric);
VILIQ_DEFINE_ERROR(FitDiverged, numeric);
VILIQ_DEFINE_ERROR(NonIdentifiable, numeric);
VILIQ_DEFINE_ERROR(NonMonotoneCurve, validation);

// cli-io
VILIQ_DEFINE_ERROR(ConfigHashMismatch, validation);
VILIQ_DEFINE_ERROR(IoError, io);

#undef VILIQ_DEFINE_ERROR

} // namespace viliq
