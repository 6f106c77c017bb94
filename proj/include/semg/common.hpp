#pragma once

// Shared aliases and small types used across the library.

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace semg {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Matrixf = Matrix<float>;
using Matrixd = Matrix<double>;

inline constexpr int kNumChannels = 4;
inline constexpr int kNumClasses = 6;  // G0 (rest) .. G5
inline constexpr int kWindowLength = 75;
inline constexpr int kWindowStride = 18;

// Bad argument / malformed input. Messages name the offending field.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Filesystem / serialization problems.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation not valid in current object state (e.g. eval before training).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

// One batch of activations flowing through the network.
//
// Convolutional stage: rows = channels, cols = length * batch, and the column
// for position x of sample n is x * batch + n (position-major so that a
// per-position block is contiguous).
// Dense stage: length == 1, so data is simply features x batch.
template <typename S>
struct Batch {
  Matrix<S> data;
  int channels = 0;
  int length = 0;
  int batch = 0;

  bool shape_ok() const {
    return data.rows() == channels &&
           data.cols() == static_cast<Eigen::Index>(length) * batch;
  }
};

}  // namespace semg
