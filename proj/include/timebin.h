/*
 * C interface to the time-bin entanglement analysis library.
 *
 * All functions return tb_status; on failure tb_last_error() gives a
 * thread-local human-readable message. Objects are opaque handles owned
 * by the caller and released with the matching *_free function.
 */

#ifndef TIMEBIN_H
#define TIMEBIN_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tb_status {
    TB_OK = 0,
    TB_ERR_USAGE = 1,         /* bad arguments or malformed configuration */
    TB_ERR_DATA = 2,          /* unreadable or inconsistent input data */
    TB_ERR_NONCONVERGED = 3,  /* optimizer stopped before convergence */
    TB_ERR_INTERNAL = 4
} tb_status;

const char* tb_last_error(void);
const char* tb_version(void);

/* ---- density operators ---------------------------------------------- */

typedef struct tb_density tb_density;

tb_status tb_density_load(const char* path, tb_density** out);
tb_status tb_density_save(const tb_density* rho, const char* path);
tb_status tb_density_maximally_entangled(int d, double phi, tb_density** out);
tb_status tb_density_werner(double p, double phi, tb_density** out);
int tb_density_dim(const tb_density* rho);
void tb_density_free(tb_density* rho);

/* ---- figures of merit ------------------------------------------------ */

typedef struct tb_merit {
    double fidelity;
    double trace_distance;
    double linear_entropy;
    double von_neumann_entropy;
    double conditional_entropy_signal;
    double conditional_entropy_idler;
    double coherent_information;
    double secure_key_bound_bits;
    double optimal_phi;
} tb_merit;

/* phi = the target-state phase; pass NAN to optimize it. */
tb_status tb_metrics_compute(const tb_density* rho, double phi, tb_merit* out);
tb_status tb_metrics_write_json(const tb_merit* merit, const char* path);
tb_status tb_report_write(const tb_density* rho, const char* path);

/* ---- pipeline stages (file based) ------------------------------------ */

/* seed < 0 keeps the seed from the config file. */
tb_status tb_simulate(const char* config_path, const char* out_dir, double scale,
                      int64_t seed);

tb_status tb_track(const char* histograms_csv, int detector, double slot_interval_ns,
                   double window_ns, const char* out_csv);

tb_status tb_realign(const char* events_csv, const char* offsets_alice_csv,
                     const char* offsets_bob_csv, const char* counts_template_csv,
                     double slot_interval_ns, double window_ns, const char* out_counts_csv);

tb_status tb_reconstruct(const char* counts_csv, const char* calib_a_json,
                         const char* calib_b_json, const char* rho_out_json,
                         const char* report_out_json, int max_iterations, double tolerance);

/* config_path may be the literal preset name "paper-100km". */
tb_status tb_run(const char* config_path, const char* out_dir, double scale, int64_t seed,
                 int parallel_trials);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TIMEBIN_H */
