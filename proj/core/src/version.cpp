#include "stathm/version.hpp"

#include <fftw3.h>

namespace stathm {

std::string_view library_version() { return STATHM_VERSION; }

std::string fftw_version() { return ::fftw_version; }

std::string_view compiler_version() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

}  // namespace stathm
