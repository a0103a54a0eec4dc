#pragma once

#include <stdexcept>
#include <string>

namespace hpc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// pcap ingestion
class MalformedHeader : public Error { using Error::Error; };
class TruncatedRecord : public Error { using Error::Error; };

// matrix encoding
class InvalidTarget : public Error { using Error::Error; };

// tensor / cnn
class ShapeMismatch : public Error { using Error::Error; };
class NumericalError : public Error { using Error::Error; };
class CacheMismatch : public Error { using Error::Error; };

// training
class LengthMismatch : public Error { using Error::Error; };
class EmptyDataset : public Error { using Error::Error; };
class InconsistentShapes : public Error { using Error::Error; };

// model / dataset files
class BadMagic : public Error { using Error::Error; };
class UnsupportedVersion : public Error { using Error::Error; };
class ChecksumMismatch : public Error { using Error::Error; };
class ShapeInconsistent : public Error { using Error::Error; };

// catalog
class CatalogParseError : public Error { using Error::Error; };
class DuplicateApplication : public CatalogParseError { using CatalogParseError::CatalogParseError; };
class UnknownServiceReference : public CatalogParseError { using CatalogParseError::CatalogParseError; };
class BadDscp : public CatalogParseError { using CatalogParseError::CatalogParseError; };

// evaluation
class ClassMismatch : public Error { using Error::Error; };
class EmptyTestSet : public Error { using Error::Error; };

// generic I/O
class IoError : public Error { using Error::Error; };

}  // namespace hpc
