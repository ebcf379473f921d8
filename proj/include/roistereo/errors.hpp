#pragma once

#include <stdexcept>
#include <string>

namespace roistereo {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateBox : Error {
    explicit DegenerateBox(const std::string& msg) : Error(msg) {}
};

struct BehindCamera : Error {
    explicit BehindCamera(const std::string& msg) : Error(msg) {}
};

struct SingularIntrinsics : Error {
    explicit SingularIntrinsics(const std::string& msg) : Error(msg) {}
};

struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& msg) : Error(msg) {}
};

struct NumericalOverflow : Error {
    explicit NumericalOverflow(const std::string& msg) : Error(msg) {}
};

struct InvalidRange : Error {
    explicit InvalidRange(const std::string& msg) : Error(msg) {}
};

struct EmptyVolume : Error {
    explicit EmptyVolume(const std::string& msg) : Error(msg) {}
};

struct DegenerateLabels : Error {
    explicit DegenerateLabels(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct ScenarioError : Error {
    explicit ScenarioError(const std::string& msg) : Error(msg) {}
};

}  // namespace roistereo
