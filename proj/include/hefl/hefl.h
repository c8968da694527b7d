// Copyright 2026 The hefl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HEFL_HEFL_H_
#define HEFL_HEFL_H_

/*
 * C interface to the hefl core. Every function returns a hefl_status; on
 * failure hefl_last_error() describes the problem (per thread, valid until
 * the next call). Strings handed out through char** belong to the caller and
 * are released with hefl_string_free().
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HEFL_API __declspec(dllexport)
#else
#define HEFL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hefl_status {
  HEFL_OK = 0,
  HEFL_E_INVALID_ARGUMENT = 1,
  HEFL_E_DOMAIN = 2,
  HEFL_E_KEY_MISMATCH = 3,
  HEFL_E_GENERATION = 4,
  HEFL_E_INCOMPLETE = 5,
  HEFL_E_DUPLICATE = 6,
  HEFL_E_DEGENERATE = 7,
  HEFL_E_PROTOCOL_ABORT = 8,
  HEFL_E_TRAINING = 9,
  HEFL_E_DIVERGENCE = 10,
  HEFL_E_ORDERING = 11,
  HEFL_E_VALIDATION = 12,
  HEFL_E_CONFIG = 13,
  HEFL_E_IO = 14,
  HEFL_E_PARSE = 15,
  HEFL_E_INTERNAL = 99
} hefl_status;

HEFL_API const char* hefl_version(void);
HEFL_API const char* hefl_status_name(hefl_status status);
HEFL_API const char* hefl_last_error(void);
HEFL_API void hefl_string_free(char* s);

/* Paillier key pairs. */
typedef struct hefl_keypair hefl_keypair;

HEFL_API hefl_status hefl_keypair_generate(unsigned bits, uint64_t seed,
                                           hefl_keypair** out);
HEFL_API void hefl_keypair_free(hefl_keypair* kp);
/* {"g":"<hex>","n":"<hex>"} */
HEFL_API hefl_status hefl_keypair_public_json(const hefl_keypair* kp, char** out);
/* Fixed-point encodes (scale 2^24) and encrypts; output is the serialized
   ciphertext vector. */
HEFL_API hefl_status hefl_encrypt_vector(const hefl_keypair* kp,
                                         const double* values, size_t count,
                                         uint64_t seed, char** out);
/* Writes up to `capacity` values; *count receives the vector length. */
HEFL_API hefl_status hefl_decrypt_vector(const hefl_keypair* kp,
                                         const char* serialized, double* out,
                                         size_t capacity, size_t* count);

/* Stacked GRU over scalar inputs; each layer reads the previous layer's
   hidden state. */
HEFL_API hefl_status hefl_param_count(const size_t* hidden, size_t layers,
                                      int dense_output, uint64_t* out);
/* W * (226 * (P - 1) + 230) milliseconds. */
HEFL_API hefl_status hefl_complexity_ms(uint64_t w, uint64_t p, uint64_t* out);

/* Simulation. */
typedef struct hefl_config hefl_config;

/* Loads a config or run manifest. When has_seed is nonzero `seed` replaces
   the file's seed. */
HEFL_API hefl_status hefl_config_load(const char* path, int has_seed,
                                      uint64_t seed, hefl_config** out);
HEFL_API void hefl_config_free(hefl_config* cfg);
HEFL_API hefl_status hefl_config_json(const hefl_config* cfg, char** out);
/* Runs every round and writes the reports to out_dir; *summary receives a
   JSON summary of the run. */
HEFL_API hefl_status hefl_simulate(const hefl_config* cfg, const char* out_dir,
                                   char** summary);

/* Benchmarks: suite is he_keygen, he_ops, dhfa or ledger. reps == 0 keeps
   the default. *report receives JSON. */
HEFL_API hefl_status hefl_bench(const char* suite, size_t reps, uint64_t seed,
                                char** report);

/* Verifies a chain dump file. A chain that fails verification is not an
   error: *valid is set to 0 and *report explains why. With has_seed the
   signatures are checked against that deployment seed. */
HEFL_API hefl_status hefl_verify_chain(const char* dump_path, int has_seed,
                                       uint64_t seed, int* valid, char** report);

/* Synthetic traffic CSV (timestamp,detector_id,flow) from a data spec. */
HEFL_API hefl_status hefl_gen_data(const char* spec_path, int has_seed,
                                   uint64_t seed, char** csv);

#ifdef __cplusplus
}
#endif

#endif /* HEFL_HEFL_H_ */
