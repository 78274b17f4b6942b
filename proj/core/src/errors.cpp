#include "selectest/errors.hpp"

namespace selectest {

Error::Error(ErrorKind kind, std::string stage, const std::string& message)
    : std::runtime_error("[" + stage + "] " + message),
      kind_(kind),
      stage_(std::move(stage)),
      message_(message) {}

void rethrow_with_stage(const Error& e, const std::string& stage) {
  const std::string path = stage + "/" + e.stage();
  switch (e.kind()) {
    case ErrorKind::Config:
      throw ConfigError(path, e.message());
    case ErrorKind::Data:
      throw DataError(path, e.message());
    case ErrorKind::Infeasible: {
      const auto* inf = dynamic_cast<const InfeasibleError*>(&e);
      throw InfeasibleError(path, e.message(), inf ? inf->count() : 0);
    }
  }
  throw Error(e.kind(), path, e.message());
}

int exit_code_for(ErrorKind kind) noexcept {
  return kind == ErrorKind::Infeasible ? 2 : 1;
}

}  // namespace selectest
