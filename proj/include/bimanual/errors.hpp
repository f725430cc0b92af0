#pragma once

#include <stdexcept>
#include <string>

namespace bimanual {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define BIMANUAL_ERROR(Name)                      \
    class Name : public Error {                   \
    public:                                       \
        explicit Name(const std::string& what)    \
            : Error(#Name ": " + what) {}         \
    }

BIMANUAL_ERROR(InputError);
BIMANUAL_ERROR(InputShapeError);
BIMANUAL_ERROR(ConfigError);
BIMANUAL_ERROR(BoundsError);
BIMANUAL_ERROR(EncodeError);
BIMANUAL_ERROR(CodecError);
BIMANUAL_ERROR(LossError);
BIMANUAL_ERROR(CompositionError);
BIMANUAL_ERROR(PolicyError);
BIMANUAL_ERROR(ProtocolError);
BIMANUAL_ERROR(ValidationError);
BIMANUAL_ERROR(IoError);

#undef BIMANUAL_ERROR

}  // namespace bimanual
