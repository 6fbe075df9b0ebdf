#pragma once

// Every translation unit that uses cpp-httplib must agree on TLS support.
#ifdef SPANEL_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
