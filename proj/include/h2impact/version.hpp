#pragma once

#define H2IMPACT_VERSION "1.0.0"
