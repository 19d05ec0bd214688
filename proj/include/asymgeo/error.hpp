#pragma once

#include <stdexcept>
#include <string>

namespace asymgeo {

// Base for every error the library raises on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RangeError : Error { using Error::Error; };
struct LookupError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct StructuralError : Error { using Error::Error; };
struct CapabilityError : Error { using Error::Error; };
struct GeometryError : Error { using Error::Error; };
struct InvalidTransform : Error { using Error::Error; };
struct ThreadError : Error { using Error::Error; };
struct UsageError : Error { using Error::Error; };

struct TowerBreak : Error {
    int level;
    TowerBreak(int lvl, const std::string& why)
        : Error("no extending geodesic at level " + std::to_string(lvl) + ": " + why), level(lvl) {}
};

struct CurvatureUndefined : Error { using Error::Error; };

}  // namespace asymgeo
