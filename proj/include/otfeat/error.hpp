#pragma once

#include <stdexcept>
#include <string>

namespace otfeat {

// Base class for all library errors. Subclasses map 1:1 onto the failure
// classes surfaced by the CLI (domain errors exit 1, I/O errors exit 2).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Feature-file header is structurally wrong (magic, version, reserved bytes,
// zero dimensions, trailing bytes).
class FormatError : public Error {
public:
    using Error::Error;
};

// Feature-file payload is shorter than the header promises.
class TruncationError : public Error {
public:
    using Error::Error;
};

// Payload values violate data invariants (NaN/Inf).
class DataError : public Error {
public:
    using Error::Error;
};

// Underlying read/write failed.
class IoError : public Error {
public:
    using Error::Error;
};

// Manifest is invalid: duplicate id, missing file, domain mismatch, bad JSON.
class ManifestError : public Error {
public:
    using Error::Error;
};

// Pool factor does not divide the spatial dimensions.
class PoolError : public Error {
public:
    using Error::Error;
};

// Incompatible shapes or dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Problem size exceeds a configured cap.
class SizeError : public Error {
public:
    using Error::Error;
};

// Marginals are not probability vectors.
class MarginalError : public Error {
public:
    using Error::Error;
};

// Parameter outside its legal range.
class ParamError : public Error {
public:
    using Error::Error;
};

// Numerical failure (e.g. kernel underflow in the naive Sinkhorn mode).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Index construction failed (empty manifest, malformed index file).
class IndexError : public Error {
public:
    using Error::Error;
};

// A report row cannot be produced (query with no candidates).
class RowError : public Error {
public:
    using Error::Error;
};

} // namespace otfeat
