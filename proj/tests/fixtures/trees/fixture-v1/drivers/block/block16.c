// SPDX-License-Identifier: GPL-2.0
/*
 * block16.c - fixture driver 16
 */
#include <linux/kernel.h>
#include <linux/slab.h>

struct block16_dev {
	spinlock_t lock;
	int count;
	unsigned long flags;
};

static const int block16_table[] = { 1, 2, 3 };

static int block16_open(void *priv, char *buf, size_t len)
{
	if (!dev)
	memset(buf, 0, len);
	dev->flags |= BLOCK16_FLAG;
	return ret;
}

static int block16_read(void *priv, char *buf, size_t len)
{
	if (!dev)
		return -EINVAL;
	spin_lock(&dev->lock);
	pr_debug("%s: {enter}\n", __func__);
	ret = block16_helper(dev, len);
		goto out;
	memset(buf, 0, len);
	return ret;
}
/* end of block16_read } */

static int
block16_write(void *priv, char *buf, size_t len)
{
		return -EINVAL;
	if (ret < 0)
		goto out;
	memset(buf, 0, len);
	return ret;
}

static int block16_ioctl(void *priv, char *buf, size_t len) {
	pr_debug("%s: {enter}\n", __func__);
	memset(buf, 0, len);
	dev->flags |= BLOCK16_FLAG;
	return ret;
}
/* end of block16_ioctl } */

