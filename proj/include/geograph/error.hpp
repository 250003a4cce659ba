#pragma once

#include <stdexcept>
#include <string>

namespace geograph {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Ray from a pixel at or above the horizon row never meets the ground plane.
class HorizonRayError : public Error {
public:
  using Error::Error;
};

// Object directly below the camera; panorama column is undefined.
class DegenerateRayError : public Error {
public:
  using Error::Error;
};

class EmptySceneError : public Error {
public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
public:
  using Error::Error;
};

class MissingScoresError : public Error {
public:
  using Error::Error;
};

class EmptyGraphError : public Error {
public:
  using Error::Error;
};

class NodeSetMismatchError : public Error {
public:
  using Error::Error;
};

class NoValidViewsError : public Error {
public:
  using Error::Error;
};

// Scene/checkpoint file violates the documented schema. Message carries
// file, line and field diagnostics.
class SchemaError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace geograph
