#pragma once

#include "hypercyc/errors.hpp"
#include "hypercyc/core_algebra.hpp"
#include "hypercyc/words.hpp"
#include "hypercyc/kernel.hpp"
#include "hypercyc/normal_form.hpp"
#include "hypercyc/structure.hpp"
#include "hypercyc/coverage.hpp"
#include "hypercyc/orbit.hpp"
#include "hypercyc/jset.hpp"
#include "hypercyc/certify.hpp"
#include "hypercyc/counterexample.hpp"
#include "hypercyc/io.hpp"
#include "hypercyc/report.hpp"
