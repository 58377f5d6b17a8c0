#pragma once

#include "rrbto/benchmarks.hpp"
#include "rrbto/config.hpp"
#include "rrbto/driver.hpp"
#include "rrbto/errors.hpp"
#include "rrbto/fem.hpp"
#include "rrbto/filter.hpp"
#include "rrbto/io.hpp"
#include "rrbto/mma.hpp"
#include "rrbto/monte_carlo.hpp"
#include "rrbto/parallel.hpp"
#include "rrbto/quadrature.hpp"
#include "rrbto/random_field.hpp"
#include "rrbto/reliability.hpp"
#include "rrbto/report.hpp"
#include "rrbto/sora.hpp"
#include "rrbto/srsm.hpp"
