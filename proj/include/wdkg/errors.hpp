#ifndef WDKG_ERRORS_HPP
#define WDKG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wdkg {

// Base class for all library errors. CLI maps these to exit code 1
// (validation) while anything else becomes exit code 2 (runtime).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define WDKG_DEFINE_ERROR(NAME)                                                \
    class NAME : public Error {                                               \
    public:                                                                   \
        using Error::Error;                                                   \
    }

WDKG_DEFINE_ERROR(DegenerateMotion);     // coherence time unbounded
WDKG_DEFINE_ERROR(FrameTooLong);         // frame exceeds coherence block
WDKG_DEFINE_ERROR(SchemaViolation);      // malformed KG file, names field path
WDKG_DEFINE_ERROR(ConfigInvalid);        // bad configuration value
WDKG_DEFINE_ERROR(ShapeMismatch);        // tensor operator shape conflict
WDKG_DEFINE_ERROR(NotScalar);            // backward() from a non-scalar
WDKG_DEFINE_ERROR(InsufficientNonEdges); // negative sampling pool exhausted
WDKG_DEFINE_ERROR(EmptyTestSet);         // evaluation with no labeled pairs
WDKG_DEFINE_ERROR(DegenerateTarget);     // constant KPI series
WDKG_DEFINE_ERROR(Diverged);             // non-finite training loss
WDKG_DEFINE_ERROR(MissingArtifact);      // expected pipeline output absent

#undef WDKG_DEFINE_ERROR

} // namespace wdkg

#endif
