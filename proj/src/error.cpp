#include "qtunnel/error.hpp"

namespace qtunnel {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Domain: return "DOMAIN";
        case ErrorCode::Parity: return "PARITY";
        case ErrorCode::Size: return "SIZE";
        case ErrorCode::Monostable: return "MONOSTABLE";
        case ErrorCode::NoBarrier: return "NO_BARRIER";
        case ErrorCode::NoPeriodicInstanton: return "NO_PERIODIC_INSTANTON";
        case ErrorCode::NonConverged: return "NON_CONVERGED";
        case ErrorCode::Tolerance: return "TOLERANCE";
        case ErrorCode::Degenerate: return "DEGENERATE";
        case ErrorCode::InsufficientData: return "INSUFFICIENT_DATA";
        case ErrorCode::UnsupportedModel: return "UNSUPPORTED_MODEL";
        case ErrorCode::Config: return "CONFIG";
        case ErrorCode::Io: return "IO";
    }
    return "UNKNOWN";
}

}  // namespace qtunnel
