#pragma once

// torch must come first; c10's logging macros collide with doctest's
// assertion names, so drop them before doctest defines its own.
#include <torch/torch.h>

#undef CHECK
#undef CHECK_EQ
#undef CHECK_NE
#undef CHECK_GT
#undef CHECK_GE
#undef CHECK_LT
#undef CHECK_LE
#include "doctest.h"
