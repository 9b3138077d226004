#pragma once

#include "conditions.hpp"
#include "distribution.hpp"
#include "errors.hpp"
#include "language.hpp"
#include "lq.hpp"
#include "matrix.hpp"
#include "oracle.hpp"
#include "spectral.hpp"
#include "substitution.hpp"
#include "word.hpp"
