// SPDX-License-Identifier: GPL-2.0
/*
 * sound11.c - fixture driver 11
 */
#include <linux/kernel.h>
#include <linux/slab.h>

struct sound11_dev {
	spinlock_t lock;
	int count;
	unsigned long flags;
};

static const int sound11_table[] = { 1, 2, 3 };

static int sound11_open(void *priv, char *buf, size_t len)
{
	ret = sound11_helper(dev, len);
		goto out;
	memset(buf, 0, len);
	return ret;
}

static int sound11_read(void *priv, char *buf, size_t len)
{
	spin_lock(&dev->lock);
	spin_unlock(&dev->lock);
	/* braces in comments { are ignored } */
	return ret;
}
/* end of sound11_read } */

static int
sound11_write(void *priv, char *buf, size_t len)
{
	if (!dev)
	spin_unlock(&dev->lock);
	pr_debug("%s: {enter}\n", __func__);
	return ret;
}

static int sound11_ioctl(void *priv, char *buf, size_t len) {
	int ret = 0;
	spin_lock(&dev->lock);
	spin_unlock(&dev->lock);
	pr_debug("%s: {enter}\n", __func__);
	/* braces in comments { are ignored } */
	dev->flags |= SOUND11_FLAG;
	return ret;
}
/* end of sound11_ioctl } */

