#pragma once

#include <stdexcept>
#include <string>

namespace fbr {

/// Base of every error thrown by the library. `kind()` is a stable
/// identifier used in machine-readable error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define FBR_DEFINE_ERROR(Name)                                    \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

FBR_DEFINE_ERROR(DomainError);
FBR_DEFINE_ERROR(SpecError);
FBR_DEFINE_ERROR(ShapeError);
FBR_DEFINE_ERROR(NumericalError);
FBR_DEFINE_ERROR(DegenerateDataError);
FBR_DEFINE_ERROR(DegenerateDrawsError);
FBR_DEFINE_ERROR(DegenerateTruthError);
FBR_DEFINE_ERROR(InitError);
FBR_DEFINE_ERROR(IngestError);

#undef FBR_DEFINE_ERROR

}  // namespace fbr
