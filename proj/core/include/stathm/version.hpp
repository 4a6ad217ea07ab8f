#pragma once

#include <string>
#include <string_view>

namespace stathm {

std::string_view library_version();
std::string fftw_version();
std::string_view compiler_version();

}  // namespace stathm
