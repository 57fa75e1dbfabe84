#pragma once

#include <stdexcept>
#include <string>

namespace fusevec {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// expr-core / backends
struct LengthMismatch : Error {
    using Error::Error;
};
struct TagConflict : Error {
    using Error::Error;
};
struct UntaggedLeaf : Error {
    using Error::Error;
};
struct KernelParseError : Error {
    using Error::Error;
};

// block containers
struct ShapeMismatch : Error {
    using Error::Error;
};
struct KindMismatch : Error {
    using Error::Error;
};
struct ArityMismatch : Error {
    using Error::Error;
};
struct IndexOutOfRange : Error {
    using Error::Error;
};

// fluid layer
struct BadMap : Error {
    using Error::Error;
};

// bench harness
struct ConfigError : Error {
    using Error::Error;
};
struct UnknownExpression : Error {
    using Error::Error;
};
struct OracleMismatch : Error {
    using Error::Error;
};

}  // namespace fusevec
