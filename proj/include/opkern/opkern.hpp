#pragma once

#include "opkern/error.hpp"
#include "opkern/gp.hpp"
#include "opkern/gram.hpp"
#include "opkern/identities.hpp"
#include "opkern/io.hpp"
#include "opkern/kernel_spec.hpp"
#include "opkern/kernels.hpp"
#include "opkern/rkhs.hpp"
#include "opkern/types.hpp"
