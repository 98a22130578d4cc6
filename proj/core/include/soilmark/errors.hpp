#pragma once

#include <stdexcept>
#include <string>

namespace soilmark {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

// -- raster model --
class CrsMismatch : public Error {
public:
  using Error::Error;
};

class DisjointRoi : public Error {
public:
  using Error::Error;
};

// -- geotiff / png codecs --
class UnsupportedFeature : public Error {
public:
  using Error::Error;
};

class MalformedFile : public Error {
public:
  using Error::Error;
};

// -- scene catalog --
class MalformedSidecar : public Error {
public:
  using Error::Error;
};

class HttpError : public Error {
public:
  HttpError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const { return status_; }

private:
  int status_ = 0;
};

class MalformedResponse : public Error {
public:
  using Error::Error;
};

// -- band math / compositing --
class MissingBand : public Error {
public:
  using Error::Error;
};

class EmptyInput : public Error {
public:
  using Error::Error;
};

class EmptyBucket : public Error {
public:
  using Error::Error;
};

// -- decomposition --
class DegenerateBand : public Error {
public:
  using Error::Error;
};

class InsufficientData : public Error {
public:
  using Error::Error;
};

class OutOfRange : public Error {
public:
  using Error::Error;
};

// -- rendering / statistics --
class EmptyBand : public Error {
public:
  using Error::Error;
};

// -- pipeline --
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace soilmark
