#pragma once

#include <exception>
#include <iostream>

#include "domeport/error.h"

namespace domeport::tools {

template <typename Body>
int Guarded(Body&& body) {
  try {
    return body();
  } catch (const Error& error) {
    std::cerr << "error [" << ErrorCodeName(error.code()) << "]: " << error.what()
              << "\n";
    return IsInputError(error.code()) ? kExitInputError : kExitNumericalFailure;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace domeport::tools
