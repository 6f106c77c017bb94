#pragma once

// Little-endian fixed-width stream helpers shared by the binary file formats.

#include "semg/common.hpp"

#include <istream>
#include <ostream>
#include <type_traits>

namespace semg::detail {

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* field) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw IoError(std::string("file truncated while reading ") + field);
  return v;
}

}  // namespace semg::detail
