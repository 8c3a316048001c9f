/* Decode a memory JPEG with the system libjpeg into a malloc'd buffer. */
#include <setjmp.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include <jpeglib.h>

struct oracle_err {
  struct jpeg_error_mgr pub;
  jmp_buf jump;
  char *msg;
  int msg_len;
};

static void on_error(j_common_ptr cinfo) {
  struct oracle_err *e = (struct oracle_err *)cinfo->err;
  char buf[JMSG_LENGTH_MAX];
  (*cinfo->err->format_message)(cinfo, buf);
  snprintf(e->msg, e->msg_len, "%s", buf);
  longjmp(e->jump, 1);
}

/* warnings are counted, not printed */
static void on_message(j_common_ptr cinfo, int level) {
  if (level < 0)
    cinfo->err->num_warnings++;
}

int oracle_version(void) { return JPEG_LIB_VERSION; }

void oracle_free(unsigned char *p) { free(p); }

int oracle_decode(const unsigned char *data, unsigned long len,
                  unsigned char **out, int *width, int *height,
                  int *channels, int *warnings, char *msg, int msg_len) {
  struct jpeg_decompress_struct cinfo;
  struct oracle_err err;
  unsigned char *volatile buf = NULL;

  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = on_error;
  err.pub.emit_message = on_message;
  err.msg = msg;
  err.msg_len = msg_len;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    free(buf);
    return -1;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, (unsigned char *)data, len);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.dct_method = JDCT_ISLOW;
  cinfo.out_color_space =
      cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  size_t stride = (size_t)cinfo.output_width * cinfo.output_components;
  buf = malloc(stride * cinfo.output_height);
  if (!buf) {
    snprintf(msg, msg_len, "out of memory");
    jpeg_destroy_decompress(&cinfo);
    return -1;
  }
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buf + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);

  *out = buf;
  *width = (int)cinfo.output_width;
  *height = (int)cinfo.output_height;
  *channels = cinfo.output_components;
  *warnings = (int)err.pub.num_warnings;
  jpeg_destroy_decompress(&cinfo);
  return 0;
}
