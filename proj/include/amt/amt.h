/* C interface to the transcription toolkit. */
#ifndef AMT_AMT_H
#define AMT_AMT_H

#include <stddef.h>

#if defined(_WIN32)
#  define AMT_API __declspec(dllexport)
#else
#  define AMT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum amt_status {
  AMT_OK = 0,
  AMT_E_INVALID_ARGUMENT,
  AMT_E_UNREADABLE_FILE,
  AMT_E_UNSUPPORTED_ENCODING,
  AMT_E_EMPTY_AUDIO,
  AMT_E_INVALID_CONFIG,
  AMT_E_ALL_SILENT,
  AMT_E_DIMENSION_MISMATCH,
  AMT_E_EMPTY_TRAINING,
  AMT_E_MALFORMED_FILE,
  AMT_E_IO_FAILURE,
  AMT_E_OUT_OF_RANGE,
  AMT_E_EMPTY_LIBRARY,
  AMT_E_SPLIT_LEAKAGE,
  AMT_E_BANK_MISMATCH,
  AMT_E_MISSING_PAIR,
  AMT_E_MODEL_STATE_MISMATCH,
  AMT_E_INTERNAL
} amt_status;

typedef struct amt_audio amt_audio;
typedef struct amt_spectrogram amt_spectrogram;
typedef struct amt_score amt_score;

typedef struct amt_note {
  int pitch;
  double onset;
  double offset;
  int velocity;
} amt_note;

AMT_API const char* amt_version(void);
AMT_API const char* amt_status_name(amt_status status);
/* Message of the last failure on the calling thread; empty after success. */
AMT_API const char* amt_last_error(void);
/* Process exit code: 0 success, 1 input error, 2 internal error. */
AMT_API int amt_exit_code(amt_status status);
AMT_API void amt_string_free(char* s);

/* Config arguments are JSON documents (NULL or "" for defaults). */
AMT_API amt_status amt_config_resolve(const char* config_json, char** resolved_json);

AMT_API amt_status amt_audio_load(const char* path, amt_audio** out);
AMT_API size_t amt_audio_length(const amt_audio* audio);
AMT_API int amt_audio_sample_rate(const amt_audio* audio);
AMT_API void amt_audio_free(amt_audio* audio);

AMT_API amt_status amt_spectrogram_compute(const amt_audio* audio, const char* config_json,
                                           amt_spectrogram** out);
AMT_API size_t amt_spectrogram_bins(const amt_spectrogram* spec);
AMT_API size_t amt_spectrogram_frames(const amt_spectrogram* spec);
AMT_API double amt_spectrogram_value(const amt_spectrogram* spec, size_t bin, size_t frame);
AMT_API amt_status amt_spectrogram_write_csv(const amt_spectrogram* spec, const char* path);
AMT_API void amt_spectrogram_free(amt_spectrogram* spec);

AMT_API amt_status amt_score_read(const char* path, amt_score** out);
AMT_API amt_status amt_score_write(const amt_score* score, const char* path);
AMT_API size_t amt_score_size(const amt_score* score);
AMT_API amt_status amt_score_note(const amt_score* score, size_t index, amt_note* out);
AMT_API void amt_score_free(amt_score* score);

/* Pipeline commands. Each writes its products under out_dir. */
AMT_API amt_status amt_extract_templates(const char* notes_dir, const char* config_json,
                                         const char* out_dir);
AMT_API amt_status amt_train(const char* manifest_path, const char* config_json, const char* out_dir);
/* input is a WAV file or a directory of WAV files. */
AMT_API amt_status amt_transcribe(const char* input, const char* bank_dir, const char* models_dir,
                                  const char* config_json, const char* out_dir);
/* Writes report.json and report.txt; *table (optional) receives the text table. */
AMT_API amt_status amt_evaluate(const char* est_dir, const char* ref_dir, const char* config_json,
                                const char* out_dir, char** table);
AMT_API amt_status amt_synth(const char* config_json, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* AMT_AMT_H */
