#pragma once

#include <stdexcept>
#include <string>

namespace fhk {

enum class ErrorKind {
    domain,          // argument outside the operation's domain
    data,            // coefficient data violating declared bounds
    config,          // malformed or inconsistent experiment configuration
    non_convergence, // quadrature or series did not reach tolerance
    consistency,     // a computed kernel failed a structural sanity check
    internal
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
    if (!ok) throw Error(kind, what);
}

} // namespace fhk
