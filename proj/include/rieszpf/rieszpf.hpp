#pragma once

#include "rieszpf/error.hpp"
#include "rieszpf/experiment.hpp"
#include "rieszpf/kappa.hpp"
#include "rieszpf/numeric.hpp"
#include "rieszpf/pmh.hpp"
#include "rieszpf/returns.hpp"
#include "rieszpf/riesz_energy.hpp"
#include "rieszpf/riesz_sampler.hpp"
#include "rieszpf/smc.hpp"
#include "rieszpf/ssm.hpp"
